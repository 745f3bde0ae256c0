//! Functional check: rendered page summaries against summaries computed from
//! page models, on clean and on deliberately corrupted data.
//!
//! cargo run --example verify

use lq::app::{gen_data, GenConfig};
use lq::harness::verify;

fn main() {
    for fraction in [0.0, 0.2] {
        let g = gen_data(&GenConfig { seed: 42, scale: 1, malformed_fraction: fraction });
        let report = verify(&g.db, 150, 0).expect("pages build");
        let untraced = report.untraced(Some(&g.manifest));
        println!(
            "malformed fraction {fraction}: {} pages, {} mismatches, {} untraced",
            report.checked,
            report.failures.len(),
            untraced.len()
        );
        print!("{}", report.failures_jsonl());
    }
}
