//! Curation text with embedded reference and ligand tags: strict parsing,
//! reference numbering by pubmed id, and rendering.
//!
//! cargo run --example tagtext

use std::collections::HashMap;

use lq::tagtext::{collect_refs, parse_tagtext, render_segments};

fn main() {
    let text = "Binds D<sub>1</sub> with &beta;-arrestin bias <Reference id=2/>; see also <Reference id=1/>.<br><Ligand id=6077/> is the prototype.";
    let segs = parse_tagtext(text).expect("well-formed");
    for s in &segs {
        println!("{s:?}");
    }
    let pubmed = HashMap::from([(1, 9742221), (2, 7527671)]);
    let refs = collect_refs([segs.as_slice()], |id| pubmed.get(&id).copied()).expect("known references");
    for e in &refs.entries {
        println!("[{}] reference {} pubmed {}", e.position, e.reference_id, e.pubmed_id);
    }
    let names = HashMap::from([(6077, "SKF-83959".to_string())]);
    println!("\n{}", render_segments(&segs, &refs, &names).expect("renders"));

    for bad in ["IC50 < 10 nM", "<p>para</p>", "&nbsp;"] {
        println!("{bad:?}: {}", parse_tagtext(bad).unwrap_err());
    }
}
