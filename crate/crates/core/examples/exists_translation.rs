//! Emptiness tests on subcollections become SQL EXISTS subqueries.
//!
//! cargo run --example exists_translation

use lq::app::catalog;
use lq::build::*;
use lq::{normalize, shred, typecheck};

fn main() {
    let cat = catalog();
    let structures = |negate: bool| {
        let rows = for_in(
            "p",
            table("pdb_structure"),
            where_(eq(var("p").field("ligand_id"), var("l").field("ligand_id")), yield_(var("p"))),
        );
        if negate {
            not(is_empty(rows))
        } else {
            is_empty(rows)
        }
    };
    for (label, cond) in [("with structures", structures(true)), ("without structures", structures(false))] {
        let q = for_in("l", table("ligand"), where_(cond, yield_(var("l").field("name"))));
        let ty = typecheck(&q, &cat).expect("well typed");
        let plan = shred(&normalize(&q, &cat).expect("normalizes"), &ty, &cat).expect("shreds");
        println!("-- ligands {label}");
        println!("{}\n", lq::shred::to_sql(&plan.queries[0]).text);
    }
}
