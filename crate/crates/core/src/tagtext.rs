//! Curation text: a small HTML subset with embedded `<Reference id=N/>` and
//! `<Ligand id=N/>` tags.
//!
//! The parser is strict. Any `<` or `>` that does not start a recognised
//! construct is an error, as is an unknown entity or a mismatched tag.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HtmlTag {
    Sub,
    Sup,
    I,
    B,
    U,
    Br,
}

impl HtmlTag {
    pub const ALL: [HtmlTag; 6] = [HtmlTag::Sub, HtmlTag::Sup, HtmlTag::I, HtmlTag::B, HtmlTag::U, HtmlTag::Br];

    pub fn name(self) -> &'static str {
        match self {
            HtmlTag::Sub => "sub",
            HtmlTag::Sup => "sup",
            HtmlTag::I => "i",
            HtmlTag::B => "b",
            HtmlTag::U => "u",
            HtmlTag::Br => "br",
        }
    }

    fn from_name(name: &str) -> Option<HtmlTag> {
        HtmlTag::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Segment {
    Text(String),
    Entity(String),
    /// `Br` never has children.
    Html {
        tag: HtmlTag,
        children: Vec<Segment>,
    },
    RefTag(i64),
    LigandTag(i64),
}

/// Entities the parser accepts, with the text they stand for.
pub const ENTITIES: &[(&str, &str)] = &[
    ("amp", "&"),
    ("lt", "<"),
    ("gt", ">"),
    ("beta", "\u{3b2}"),
    ("alpha", "\u{3b1}"),
    ("gamma", "\u{3b3}"),
    ("Delta", "\u{394}"),
    ("micro", "\u{b5}"),
];

fn entity_text(name: &str) -> Option<&'static str> {
    ENTITIES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TagTextError {
    /// `position` is a byte offset into the input.
    #[error("malformed markup at byte {position}: {reason}")]
    MalformedMarkup { position: usize, reason: String },
    #[error("unknown reference {0}")]
    UnknownReference(i64),
    #[error("unknown ligand {0}")]
    UnknownLigand(i64),
}

fn malformed(position: usize, reason: impl Into<String>) -> TagTextError {
    TagTextError::MalformedMarkup { position, reason: reason.into() }
}

struct Open {
    tag: HtmlTag,
    at: usize,
    children: Vec<Segment>,
}

/// Parses curation text into segments.
pub fn parse_tagtext(s: &str) -> Result<Vec<Segment>, TagTextError> {
    let mut stack: Vec<Open> = Vec::new();
    let mut top: Vec<Segment> = Vec::new();
    let mut text = String::new();
    let mut pos = 0;

    fn current<'a>(stack: &'a mut [Open], top: &'a mut Vec<Segment>) -> &'a mut Vec<Segment> {
        match stack.last_mut() {
            Some(o) => &mut o.children,
            None => top,
        }
    }
    fn flush(text: &mut String, out: &mut Vec<Segment>) {
        if !text.is_empty() {
            out.push(Segment::Text(std::mem::take(text)));
        }
    }

    while pos < s.len() {
        let rest = &s[pos..];
        let c = rest.chars().next().expect("non-empty");
        match c {
            '&' => {
                let end = rest.find(';').ok_or_else(|| malformed(pos, "unterminated entity"))?;
                let name = &rest[1..end];
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
                    return Err(malformed(pos, "bare '&'"));
                }
                if entity_text(name).is_none() {
                    return Err(malformed(pos, format!("unknown entity `&{name};`")));
                }
                flush(&mut text, current(&mut stack, &mut top));
                current(&mut stack, &mut top).push(Segment::Entity(name.to_string()));
                pos += end + 1;
            }
            '>' => return Err(malformed(pos, "bare '>'")),
            '<' => {
                let (seg, len) = tag_at(rest, pos, &mut stack)?;
                flush(&mut text, current(&mut stack, &mut top));
                match seg {
                    TagEvent::Leaf(seg) => current(&mut stack, &mut top).push(seg),
                    TagEvent::Open(tag) => stack.push(Open { tag, at: pos, children: Vec::new() }),
                    TagEvent::Close => {
                        let o = stack.pop().expect("tag_at checked the open tag");
                        current(&mut stack, &mut top).push(Segment::Html { tag: o.tag, children: o.children });
                    }
                }
                pos += len;
            }
            c => {
                text.push(c);
                pos += c.len_utf8();
            }
        }
    }
    if let Some(o) = stack.last() {
        return Err(malformed(o.at, format!("unclosed <{}>", o.tag.name())));
    }
    flush(&mut text, &mut top);
    Ok(top)
}

enum TagEvent {
    Leaf(Segment),
    Open(HtmlTag),
    Close,
}

/// Recognises the construct starting with `<` at the front of `rest`.
fn tag_at(rest: &str, pos: usize, stack: &mut [Open]) -> Result<(TagEvent, usize), TagTextError> {
    for (prefix, ligand) in [("<Reference id=", false), ("<Ligand id=", true)] {
        if let Some(after) = rest.strip_prefix(prefix) {
            let digits = after.bytes().take_while(u8::is_ascii_digit).count();
            if digits == 0 || !after[digits..].starts_with("/>") {
                return Err(malformed(pos, format!("malformed {} tag", &prefix[1..prefix.len() - 4])));
            }
            let id: i64 = after[..digits].parse().map_err(|_| malformed(pos, "id out of range"))?;
            let seg = if ligand { Segment::LigandTag(id) } else { Segment::RefTag(id) };
            return Ok((TagEvent::Leaf(seg), prefix.len() + digits + 2));
        }
    }
    let end = rest.find('>').ok_or_else(|| malformed(pos, "bare '<'"))?;
    let inner = &rest[1..end];
    if inner.contains('<') {
        return Err(malformed(pos, "bare '<'"));
    }
    let len = end + 1;
    if let Some(name) = inner.strip_prefix('/') {
        let tag = HtmlTag::from_name(name).ok_or_else(|| malformed(pos, format!("unknown element `{name}`")))?;
        return match stack.last() {
            Some(o) if o.tag == tag => Ok((TagEvent::Close, len)),
            Some(o) => Err(malformed(pos, format!("</{name}> closes <{}>", o.tag.name()))),
            None => Err(malformed(pos, format!("</{name}> without an open tag"))),
        };
    }
    let (name, self_closing) = match inner.strip_suffix('/') {
        Some(n) => (n.trim_end(), true),
        None => (inner, false),
    };
    match HtmlTag::from_name(name) {
        Some(HtmlTag::Br) => Ok((TagEvent::Leaf(Segment::Html { tag: HtmlTag::Br, children: Vec::new() }), len)),
        Some(tag) if !self_closing => Ok((TagEvent::Open(tag), len)),
        Some(_) => Err(malformed(pos, format!("<{name}/> is not a void element"))),
        None if name.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) => {
            Err(malformed(pos, format!("unknown element `{name}`")))
        }
        None => Err(malformed(pos, "bare '<'")),
    }
}

/// Reference ids in document order, with repeats.
pub fn ref_ids(segs: &[Segment]) -> Vec<i64> {
    let mut out = Vec::new();
    walk(segs, &mut |s| {
        if let Segment::RefTag(id) = s {
            out.push(*id);
        }
    });
    out
}

/// Ligand ids in document order, with repeats.
pub fn ligand_ids(segs: &[Segment]) -> Vec<i64> {
    let mut out = Vec::new();
    walk(segs, &mut |s| {
        if let Segment::LigandTag(id) = s {
            out.push(*id);
        }
    });
    out
}

fn walk(segs: &[Segment], f: &mut impl FnMut(&Segment)) {
    for s in segs {
        f(s);
        if let Segment::Html { children, .. } = s {
            walk(children, f);
        }
    }
}

/// Text content with entities decoded and all tags dropped.
pub fn plain_text(segs: &[Segment]) -> String {
    let mut out = String::new();
    walk(segs, &mut |s| match s {
        Segment::Text(t) => out.push_str(t),
        Segment::Entity(n) => out.push_str(entity_text(n).unwrap_or_default()),
        _ => {}
    });
    out
}

/// Serializes segments back to curation-text source.
pub fn to_source(segs: &[Segment]) -> String {
    let mut out = String::new();
    for s in segs {
        match s {
            Segment::Text(t) => out.push_str(t),
            Segment::Entity(n) => {
                let _ = write!(out, "&{n};");
            }
            Segment::Html { tag: HtmlTag::Br, .. } => out.push_str("<br>"),
            Segment::Html { tag, children } => {
                let _ = write!(out, "<{0}>{1}</{0}>", tag.name(), to_source(children));
            }
            Segment::RefTag(id) => {
                let _ = write!(out, "<Reference id={id}/>");
            }
            Segment::LigandTag(id) => {
                let _ = write!(out, "<Ligand id={id}/>");
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefEntry {
    /// 1-based.
    pub position: usize,
    pub reference_id: i64,
    pub pubmed_id: i64,
}

/// A page's numbered reference list, ascending by pubmed id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RefList {
    pub entries: Vec<RefEntry>,
}

impl RefList {
    pub fn position_of(&self, reference_id: i64) -> Option<usize> {
        self.entries.iter().find(|e| e.reference_id == reference_id).map(|e| e.position)
    }

    pub fn pubmed_ids(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.pubmed_id).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Numbers every reference cited in `fields`: deduplicated by reference id,
/// sorted by pubmed id (reference id breaks ties), positions from 1.
pub fn collect_refs<'a, I, R>(fields: I, resolver: R) -> Result<RefList, TagTextError>
where
    I: IntoIterator<Item = &'a [Segment]>,
    R: Fn(i64) -> Option<i64>,
{
    let mut seen: BTreeMap<i64, i64> = BTreeMap::new();
    for f in fields {
        for id in ref_ids(f) {
            if let std::collections::btree_map::Entry::Vacant(v) = seen.entry(id) {
                v.insert(resolver(id).ok_or(TagTextError::UnknownReference(id))?);
            }
        }
    }
    let mut entries: Vec<(i64, i64)> = seen.into_iter().map(|(r, p)| (p, r)).collect();
    entries.sort_unstable();
    Ok(RefList {
        entries: entries
            .into_iter()
            .enumerate()
            .map(|(i, (pubmed_id, reference_id))| RefEntry { position: i + 1, reference_id, pubmed_id })
            .collect(),
    })
}

/// Escapes text for HTML element content and attribute values.
pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders segments as display HTML.
pub fn render_segments(
    segs: &[Segment],
    refs: &RefList,
    ligand_names: &HashMap<i64, String>,
) -> Result<String, TagTextError> {
    let mut out = String::new();
    render_into(segs, refs, ligand_names, &mut out)?;
    Ok(out)
}

fn render_into(
    segs: &[Segment],
    refs: &RefList,
    names: &HashMap<i64, String>,
    out: &mut String,
) -> Result<(), TagTextError> {
    for s in segs {
        match s {
            Segment::Text(t) => out.push_str(&escape_html(t)),
            Segment::Entity(n) => out.push_str(&escape_html(entity_text(n).unwrap_or_default())),
            Segment::Html { tag: HtmlTag::Br, .. } => out.push_str("<br>"),
            Segment::Html { tag, children } => {
                let _ = write!(out, "<{}>", tag.name());
                render_into(children, refs, names, out)?;
                let _ = write!(out, "</{}>", tag.name());
            }
            Segment::RefTag(id) => {
                let n = refs.position_of(*id).ok_or(TagTextError::UnknownReference(*id))?;
                let _ = write!(out, "<a href=\"#ref-{n}\"><sup>[{n}]</sup></a>");
            }
            Segment::LigandTag(id) => {
                let name = names.get(id).ok_or(TagTextError::UnknownLigand(*id))?;
                let _ = write!(out, "<a href=\"/ligand/{id}\">{}</a>", escape_html(name));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXCERPT: &str = "Some substituted benzazepines such as SKF-83959 are G-protein biased agonists of the dopamine D<sub>1</sub> receptor and fail to activate &beta;-arrestin recruitment <Reference id=28036/>; their ability to signal through G<sub>q</sub>-mediated pathways has been controversial <Reference id=33435/>.<br><br><Ligand id=6077/>, <Ligand id=9637/> and related compounds exhibit slow dissociation rates from the D<sub>1</sub> receptor.";

    fn text(s: &str) -> Segment {
        Segment::Text(s.to_string())
    }

    fn sub(s: &str) -> Segment {
        Segment::Html { tag: HtmlTag::Sub, children: vec![text(s)] }
    }

    fn br() -> Segment {
        Segment::Html { tag: HtmlTag::Br, children: vec![] }
    }

    #[test]
    fn excerpt_parses_to_the_expected_segments() {
        let segs = parse_tagtext(EXCERPT).unwrap();
        let expected = vec![
            text("Some substituted benzazepines such as SKF-83959 are G-protein biased agonists of the dopamine D"),
            sub("1"),
            text(" receptor and fail to activate "),
            Segment::Entity("beta".into()),
            text("-arrestin recruitment "),
            Segment::RefTag(28036),
            text("; their ability to signal through G"),
            sub("q"),
            text("-mediated pathways has been controversial "),
            Segment::RefTag(33435),
            text("."),
            br(),
            br(),
            Segment::LigandTag(6077),
            text(", "),
            Segment::LigandTag(9637),
            text(" and related compounds exhibit slow dissociation rates from the D"),
            sub("1"),
            text(" receptor."),
        ];
        assert_eq!(segs, expected);
        assert_eq!(to_source(&segs), EXCERPT);
    }

    #[test]
    fn plain_text_is_one_segment() {
        assert_eq!(parse_tagtext("plain text").unwrap(), vec![text("plain text")]);
        assert_eq!(parse_tagtext("").unwrap(), vec![]);
    }

    #[test]
    fn bare_angle_brackets_are_rejected_where_they_occur() {
        assert_eq!(parse_tagtext("a < b"), Err(malformed(2, "bare '<'")));
        assert!(matches!(parse_tagtext("a > b"), Err(TagTextError::MalformedMarkup { position: 2, .. })));
        assert!(matches!(parse_tagtext("IC50 <10 nM"), Err(TagTextError::MalformedMarkup { position: 5, .. })));
    }

    #[test]
    fn structural_errors() {
        let pos = |s: &str| match parse_tagtext(s) {
            Err(TagTextError::MalformedMarkup { position, .. }) => position,
            other => panic!("{s:?} gave {other:?}"),
        };
        assert_eq!(pos("<i>x</b>"), 4);
        assert_eq!(pos("x<sub>1"), 1);
        assert_eq!(pos("</i>"), 0);
        assert_eq!(pos("<div>x</div>"), 0);
        assert_eq!(pos("<SUB>x</SUB>"), 0);
        assert_eq!(pos("&nbsp;"), 0);
        assert_eq!(pos("a & b"), 2);
        assert_eq!(pos("<Reference id=12>"), 0);
        assert_eq!(pos("<Reference id=\"12\"/>"), 0);
        assert_eq!(pos("<Ligand id=/>"), 0);
        assert_eq!(pos("<i/>"), 0);
    }

    #[test]
    fn nesting_and_void_forms() {
        let segs = parse_tagtext("<b>x<i>y</i></b><br/><br />").unwrap();
        assert_eq!(
            segs,
            vec![
                Segment::Html {
                    tag: HtmlTag::B,
                    children: vec![text("x"), Segment::Html { tag: HtmlTag::I, children: vec![text("y")] }]
                },
                br(),
                br(),
            ]
        );
    }

    fn resolver(map: &[(i64, i64)]) -> impl Fn(i64) -> Option<i64> + '_ {
        move |id| map.iter().find(|(r, _)| *r == id).map(|(_, p)| *p)
    }

    #[test]
    fn refs_are_numbered_by_ascending_pubmed_id() {
        let a = parse_tagtext("<Reference id=1/> <Reference id=2/>").unwrap();
        let b = parse_tagtext("<Reference id=2/> <Reference id=3/>").unwrap();
        let map = [(1, 9742221), (2, 7527671), (3, 7527671)];
        let refs = collect_refs([a.as_slice(), b.as_slice()], resolver(&map)).unwrap();
        assert_eq!(
            refs.entries,
            vec![
                RefEntry { position: 1, reference_id: 2, pubmed_id: 7527671 },
                RefEntry { position: 2, reference_id: 3, pubmed_id: 7527671 },
                RefEntry { position: 3, reference_id: 1, pubmed_id: 9742221 },
            ]
        );
        assert!(collect_refs(std::iter::empty(), resolver(&map)).unwrap().is_empty());
        assert_eq!(collect_refs([a.as_slice()], resolver(&[])), Err(TagTextError::UnknownReference(1)));
    }

    #[test]
    fn pubmed_example_from_two_distinct_references() {
        let segs = parse_tagtext("<Reference id=10/><Reference id=11/><Reference id=10/>").unwrap();
        let refs = collect_refs([segs.as_slice()], resolver(&[(10, 9742221), (11, 7527671)])).unwrap();
        assert_eq!(refs.pubmed_ids(), vec![7527671, 9742221]);
        assert_eq!(refs.entries.iter().map(|e| e.position).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn rendering() {
        let refs = RefList {
            entries: vec![
                RefEntry { position: 1, reference_id: 5, pubmed_id: 1 },
                RefEntry { position: 2, reference_id: 6, pubmed_id: 2 },
                RefEntry { position: 3, reference_id: 7, pubmed_id: 3 },
            ],
        };
        let names = HashMap::from([(6077, "SKF-83959".to_string()), (9637, "A<B".to_string())]);
        assert_eq!(
            render_segments(&[Segment::RefTag(7)], &refs, &names).unwrap(),
            "<a href=\"#ref-3\"><sup>[3]</sup></a>"
        );
        assert_eq!(render_segments(&[text("x<y")], &refs, &names).unwrap(), "x&lt;y");
        assert_eq!(
            render_segments(&[Segment::LigandTag(9637)], &refs, &names).unwrap(),
            "<a href=\"/ligand/9637\">A&lt;B</a>"
        );
        assert_eq!(render_segments(&[Segment::RefTag(8)], &refs, &names), Err(TagTextError::UnknownReference(8)));
        assert_eq!(render_segments(&[Segment::LigandTag(1)], &refs, &names), Err(TagTextError::UnknownLigand(1)));
    }

    #[test]
    fn excerpt_renders_markers_and_links_in_order() {
        let segs = parse_tagtext(EXCERPT).unwrap();
        let refs = collect_refs([segs.as_slice()], resolver(&[(28036, 20000000), (33435, 10000000)])).unwrap();
        let names = HashMap::from([(6077, "SKF-83959".to_string()), (9637, "SKF-83822".to_string())]);
        let html = render_segments(&segs, &refs, &names).unwrap();
        assert!(html.contains("D<sub>1</sub>"));
        assert!(html.contains("\u{3b2}-arrestin"));
        let first = html.find("<sup>[2]</sup>").unwrap();
        let second = html.find("<sup>[1]</sup>").unwrap();
        let l1 = html.find("/ligand/6077").unwrap();
        let l2 = html.find("/ligand/9637").unwrap();
        assert!(first < second && second < l1 && l1 < l2);
        assert_eq!(html.matches("<br>").count(), 2);
    }
}
