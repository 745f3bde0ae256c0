//! A nested result (ligands with their synonyms) shredded into two flat
//! queries and stitched back together.
//!
//! cargo run --example nested_synonyms

use lq::app::queries::get_synonyms;
use lq::app::{catalog, gen_data, GenConfig};
use lq::build::*;
use lq::{normalize, run_query, shred, typecheck, RequestMetrics};

fn main() {
    let cat = catalog();
    let q = for_in(
        "l",
        table("ligand"),
        yield_(record([
            ("name", var("l").field("name")),
            ("synonyms", apply(get_synonyms(), vec![var("l").field("ligand_id")])),
        ])),
    );
    let ty = typecheck(&q, &cat).expect("well typed");
    let plan = shred(&normalize(&q, &cat).expect("normalizes"), &ty, &cat).expect("shreds");
    print!("{}", plan.explain());

    let db = gen_data(&GenConfig::new(42, 1)).db;
    let mut m = RequestMetrics::default();
    let v = run_query(&q, &db, &mut m).expect("runs");
    println!("\n{} flat queries; first rows:", m.query_count());
    for row in v.as_list().unwrap_or_default().iter().take(5) {
        println!("  {row}");
    }
}
