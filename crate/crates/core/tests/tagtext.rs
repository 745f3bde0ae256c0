//! Properties of the strict curation-text parser and the reference numbering.

use std::collections::{BTreeMap, HashMap};

use lq::tagtext::{
    collect_refs, ligand_ids, parse_tagtext, plain_text, ref_ids, render_segments, to_source, HtmlTag, Segment,
    TagTextError, ENTITIES,
};
use proptest::prelude::*;

fn word() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.;()-]{1,12}"
}

fn leaf() -> impl Strategy<Value = Segment> {
    prop_oneof![
        4 => word().prop_map(Segment::Text),
        1 => prop::sample::select(ENTITIES.iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>()).prop_map(Segment::Entity),
        1 => Just(Segment::Html { tag: HtmlTag::Br, children: vec![] }),
        1 => (1i64..=6).prop_map(Segment::RefTag),
        1 => (1i64..=4).prop_map(Segment::LigandTag),
    ]
}

fn segment() -> impl Strategy<Value = Segment> {
    let paired = prop::sample::select(vec![HtmlTag::Sub, HtmlTag::Sup, HtmlTag::I, HtmlTag::B, HtmlTag::U]);
    leaf().prop_recursive(3, 24, 4, move |inner| {
        (paired.clone(), prop::collection::vec(inner, 1..4)).prop_map(|(tag, children)| Segment::Html { tag, children })
    })
}

/// Adjacent text segments merge when parsed, so generated documents join them first.
fn merge_text(segs: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for s in segs {
        let s = match s {
            Segment::Html { tag, children } => Segment::Html { tag, children: merge_text(children) },
            other => other,
        };
        match (out.last_mut(), s) {
            (Some(Segment::Text(a)), Segment::Text(b)) => a.push_str(&b),
            (_, s) => out.push(s),
        }
    }
    out
}

fn document() -> impl Strategy<Value = Vec<Segment>> {
    prop::collection::vec(segment(), 0..8).prop_map(merge_text)
}

fn strip_tags(html: &str) -> String {
    let mut out = String::new();
    let mut in_tag = false;
    for c in html.chars() {
        match c {
            '<' => in_tag = true,
            '>' => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.replace("&lt;", "<").replace("&gt;", ">").replace("&quot;", "\"").replace("&#39;", "'").replace("&amp;", "&")
}

fn strip_markers(s: &str) -> String {
    let mut out = s.to_string();
    for n in 1..=6 {
        out = out.replace(&format!("[{n}]"), "");
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn source_round_trip(doc in document()) {
        let src = to_source(&doc);
        prop_assert_eq!(parse_tagtext(&src).unwrap(), doc);
    }

    #[test]
    fn rendering_keeps_text_content_in_order(doc in document()) {
        let refs = collect_refs([doc.as_slice()], |id| Some(100 - id)).unwrap();
        let names: HashMap<i64, String> = (1..=4).map(|i| (i, String::new())).collect();
        let html = render_segments(&doc, &refs, &names).unwrap();
        prop_assert_eq!(strip_markers(&strip_tags(&html)), plain_text(&doc));
    }

    #[test]
    fn numbering_is_sort_then_enumerate(pubmed in prop::collection::vec(1i64..50, 5), order in prop::collection::vec(0usize..5, 1..12)) {
        // Reference i (1-based) has pubmed id pubmed[i - 1]; `order` cites them with repeats.
        let text: String = order.iter().map(|i| format!("<Reference id={}/> ", i + 1)).collect();
        let segs = parse_tagtext(&text).unwrap();
        let refs = collect_refs([segs.as_slice()], |id| pubmed.get(id as usize - 1).copied()).unwrap();

        let mut cited: Vec<(i64, i64)> = order.iter().map(|&i| (pubmed[i], i as i64 + 1)).collect();
        cited.sort_unstable();
        cited.dedup();
        let expected: Vec<(usize, i64, i64)> =
            cited.iter().enumerate().map(|(n, &(p, r))| (n + 1, r, p)).collect();
        let actual: Vec<(usize, i64, i64)> =
            refs.entries.iter().map(|e| (e.position, e.reference_id, e.pubmed_id)).collect();
        prop_assert_eq!(actual, expected);
        prop_assert!(refs.entries.windows(2).all(|w| w[0].pubmed_id <= w[1].pubmed_id));
    }

    #[test]
    fn unknown_element_names_are_rejected(name in "[a-z]{1,6}", body in word()) {
        prop_assume!(!HtmlTag::ALL.iter().any(|t| t.name() == name));
        let src = format!("x<{name}>{body}</{name}>");
        let rejected = matches!(parse_tagtext(&src), Err(TagTextError::MalformedMarkup { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn bare_angle_bracket_fails_at_its_position(a in "[A-Za-z ]{0,10}", b in "[A-Za-z0-9 ]{0,10}") {
        let src = format!("{a}< {b}");
        prop_assert_eq!(
            parse_tagtext(&src).map_err(|e| match e {
                TagTextError::MalformedMarkup { position, .. } => position,
                other => panic!("{other:?}"),
            }),
            Err(a.len())
        );
    }
}

#[test]
fn id_extraction_keeps_document_order() {
    let segs = parse_tagtext("<b><Ligand id=2/></b> <Reference id=5/><i><Reference id=1/></i><Ligand id=9/>").unwrap();
    assert_eq!(ref_ids(&segs), [5, 1]);
    assert_eq!(ligand_ids(&segs), [2, 9]);
}

#[test]
fn resolver_gaps_surface_as_unknown_reference() {
    let segs = parse_tagtext("<Reference id=3/>").unwrap();
    let known: BTreeMap<i64, i64> = BTreeMap::new();
    assert_eq!(collect_refs([segs.as_slice()], |id| known.get(&id).copied()), Err(TagTextError::UnknownReference(3)));
}
