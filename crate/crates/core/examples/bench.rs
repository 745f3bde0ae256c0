//! Benchmarks every page kind and prints the CSV report.
//!
//! cargo run --release --example bench -- 20

use std::sync::Arc;

use lq::app::{gen_data, App, GenConfig};
use lq::harness::{bench, pages_to_check, BenchConfig};

fn main() {
    let iterations = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20);
    let app = App::new(Arc::new(gen_data(&GenConfig::new(42, 1)).db));
    let pages = pages_to_check(app.backend(), 10, 0).expect("ids load");
    let report = bench(&app, &pages, &BenchConfig { iterations });
    for row in report.rows.iter().filter(|r| r.param == "*") {
        println!(
            "{:<9} {:<16} median {:>9.3}  sd {:>8.3}  min {:>9.3}  max {:>9.3}",
            row.page, row.metric, row.median, row.std_dev, row.min, row.max
        );
    }
}
