//! A host function called inside a query is inlined by normalization, so the
//! call and the hand-written nested query have the same normal form.
//!
//! cargo run --example function_inlining

use lq::app::catalog;
use lq::app::queries::get_synonyms;
use lq::build::*;
use lq::normalize;
use lq::normalize::nf_equal;

fn main() {
    let cat = catalog();
    let via_call = for_in(
        "l",
        table("ligand"),
        yield_(record([("synonyms", apply(get_synonyms(), vec![var("l").field("ligand_id")]))])),
    );
    let by_hand = for_in(
        "l",
        table("ligand"),
        yield_(record([(
            "synonyms",
            for_in(
                "s",
                table("ligand2synonym"),
                where_(
                    and(eq(var("s").field("ligand_id"), var("l").field("ligand_id")), var("s").field("display")),
                    yield_(var("s").field("synonym")),
                ),
            ),
        )])),
    );
    let (a, b) = (normalize(&via_call, &cat).expect("normalizes"), normalize(&by_hand, &cat).expect("normalizes"));
    println!("with the call:\n{}\nwritten by hand:\n{}", a.dump(), b.dump());
    println!("nf_equal: {}", nf_equal(&a, &b));
}
