//! A flat query: one comprehension with a filter becomes one SQL statement.
//!
//! cargo run --example flat_query

use lq::app::catalog;
use lq::build::*;
use lq::{normalize, shred, typecheck};

fn main() {
    let cat = catalog();
    let q = for_in("l", table("ligand"), where_(var("l").field("approved"), yield_(var("l").field("name"))));
    let ty = typecheck(&q, &cat).expect("well typed");
    let nf = normalize(&q, &cat).expect("normalizes");
    println!("type: {ty}\n\nnormal form:\n{}", nf.dump());
    let plan = shred(&nf, &ty, &cat).expect("shreds");
    print!("{}", plan.explain());
}
