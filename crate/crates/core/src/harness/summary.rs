//! Page summaries: the data headers, references and basic info of a page,
//! extracted either from rendered HTML or directly from a page model.

use std::collections::{BTreeMap, BTreeSet};

use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::app::{scan_tag_ids, Page, PageModel};
use crate::value::Value;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSummary {
    pub basic_info: BTreeMap<String, String>,
    /// Sorted, duplicate-free.
    pub data_headers: Vec<String>,
    /// PubMed ids, ascending and duplicate-free.
    pub references: Vec<i64>,
}

impl PageSummary {
    pub fn new(
        basic_info: BTreeMap<String, String>,
        headers: impl IntoIterator<Item = String>,
        references: impl IntoIterator<Item = i64>,
    ) -> PageSummary {
        PageSummary {
            basic_info,
            data_headers: headers.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
            references: references.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SummaryError {
    #[error("malformed page: {0}")]
    MalformedPage(String),
}

fn sel(s: &str) -> Selector {
    Selector::parse(s).expect("valid selector")
}

/// Extracts the summary of a page produced by [`crate::app::render_page`].
pub fn summarize_page(html: &str) -> Result<PageSummary, SummaryError> {
    let doc = Html::parse_document(html);
    let malformed = |m: &str| SummaryError::MalformedPage(m.to_string());
    if doc.select(&sel("body[data-page]")).next().is_none() {
        return Err(malformed("no body[data-page]"));
    }
    let info = doc.select(&sel("[data-basic-info]")).next().ok_or_else(|| malformed("no basic-info block"))?;

    let mut basic_info = BTreeMap::new();
    for field in info.select(&sel("[data-field]")) {
        let key = field.value().attr("data-field").unwrap_or_default().to_string();
        let text: String = field.text().collect();
        if basic_info.insert(key.clone(), text).is_some() {
            return Err(SummaryError::MalformedPage(format!("basic-info field `{key}` repeated")));
        }
    }
    let header_sel = sel("[data-header]");
    let headers: Vec<String> =
        doc.select(&header_sel).map(|e| e.value().attr("data-header").unwrap_or_default().to_string()).collect();
    let mut references = Vec::new();
    for li in doc.select(&sel("[data-references] li")) {
        let pubmed = li.value().attr("data-pubmed").ok_or_else(|| malformed("reference without data-pubmed"))?;
        references.push(pubmed.parse().map_err(|_| malformed("non-numeric data-pubmed"))?);
    }
    Ok(PageSummary::new(basic_info, headers, references))
}

fn text_of(v: &Value, label: &str) -> String {
    match v.field(label) {
        Some(Value::Str(s)) => s.clone(),
        Some(Value::Int(i)) => i.to_string(),
        _ => String::new(),
    }
}

fn nonempty(v: &Value, label: &str) -> bool {
    v.field(label).and_then(Value::as_list).is_some_and(|l| !l.is_empty())
}

fn ids(rows: &[Value]) -> String {
    let mut ids: Vec<i64> = rows.iter().filter_map(|r| r.field("id").and_then(Value::as_int)).collect();
    ids.sort_unstable();
    ids.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

/// The summary a correct rendering of `model` must have, computed from the
/// structured data. References are found by a lenient scan of every text
/// field, so a field the renderer cannot parse shows up as a difference.
pub fn expected_summary(model: &PageModel) -> PageSummary {
    let mut info = BTreeMap::new();
    let mut headers = Vec::new();
    let rows = model.data.as_list().unwrap_or_default();
    match model.page {
        Page::LigandList(f) => {
            info.insert("filter".into(), f.to_string());
            info.insert("count".into(), rows.len().to_string());
            info.insert("entries".into(), ids(rows));
            if !rows.is_empty() {
                headers.push("Ligands".to_string());
            }
        }
        Page::DiseaseList(f) => {
            info.insert("filter".into(), f.to_string());
            info.insert("count".into(), rows.len().to_string());
            info.insert("entries".into(), ids(rows));
            if !rows.is_empty() {
                headers.push("Diseases".to_string());
            }
        }
        Page::Object(_) | Page::Disease(_) => {
            if let Some(e) = rows.first() {
                info.insert("id".into(), text_of(e, "id"));
                info.insert("name".into(), text_of(e, "name"));
                let sections: &[(&str, &str)] = if matches!(model.page, Page::Object(_)) {
                    info.insert("nomenclature".into(), text_of(e, "nomenclature"));
                    info.insert("family".into(), text_of(e, "family"));
                    &[
                        ("interactions", "Interactions"),
                        ("diseases", "Diseases"),
                        ("links", "Database Links"),
                        ("previous_names", "Previous and Unofficial Names"),
                    ]
                } else {
                    &[("targets", "Targets"), ("ligands", "Ligands")]
                };
                let (text, text_header) = if matches!(model.page, Page::Object(_)) {
                    ("overview", "Overview")
                } else {
                    ("description", "Description")
                };
                if !text_of(e, text).trim().is_empty() {
                    headers.push(text_header.to_string());
                }
                headers.extend(sections.iter().filter(|(f, _)| nonempty(e, f)).map(|(_, h)| h.to_string()));
            }
        }
    }
    let references = model
        .texts
        .iter()
        .flat_map(|t| scan_tag_ids(&t.raw).0)
        .filter_map(|id| model.references.get(&id).map(|r| r.pubmed_id));
    PageSummary::new(info, headers, references)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicInfoMismatch {
    pub field: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

/// Differences from an expected summary to an actual one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryDiff {
    pub missing_headers: Vec<String>,
    pub extra_headers: Vec<String>,
    pub missing_refs: Vec<i64>,
    pub extra_refs: Vec<i64>,
    pub basic_info_mismatches: Vec<BasicInfoMismatch>,
}

impl SummaryDiff {
    pub fn is_empty(&self) -> bool {
        self.missing_headers.is_empty()
            && self.extra_headers.is_empty()
            && self.missing_refs.is_empty()
            && self.extra_refs.is_empty()
            && self.basic_info_mismatches.is_empty()
    }
}

fn minus<T: Ord + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let b: BTreeSet<&T> = b.iter().collect();
    let mut out: Vec<T> = a.iter().filter(|x| !b.contains(x)).cloned().collect();
    out.sort();
    out.dedup();
    out
}

/// What `actual` lacks (`missing_*`) or adds (`extra_*`) relative to `expected`.
pub fn compare(expected: &PageSummary, actual: &PageSummary) -> SummaryDiff {
    let keys: BTreeSet<&String> = expected.basic_info.keys().chain(actual.basic_info.keys()).collect();
    SummaryDiff {
        missing_headers: minus(&expected.data_headers, &actual.data_headers),
        extra_headers: minus(&actual.data_headers, &expected.data_headers),
        missing_refs: minus(&expected.references, &actual.references),
        extra_refs: minus(&actual.references, &expected.references),
        basic_info_mismatches: keys
            .into_iter()
            .filter_map(|k| {
                let (e, a) = (expected.basic_info.get(k), actual.basic_info.get(k));
                (e != a).then(|| BasicInfoMismatch { field: k.clone(), expected: e.cloned(), actual: a.cloned() })
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAGE: &str = r#"<!DOCTYPE html><html><body data-page="object">
<dl data-basic-info><dt>Name</dt><dd data-field="name">GC-A</dd>
<dd data-field="nomenclature">Guanylyl cyclase, 21</dd></dl>
<section data-header="Interactions"><h2>Interactions</h2></section>
<section data-header="Diseases"><h2>Diseases</h2></section>
<section data-references><ol><li id="ref-1" data-pubmed="7527671">a</li><li id="ref-2" data-pubmed="9742221">b</li></ol></section>
</body></html>"#;

    #[test]
    fn extracts_headers_refs_and_info() {
        let s = summarize_page(PAGE).unwrap();
        assert_eq!(s.data_headers, ["Diseases", "Interactions"]);
        assert_eq!(s.references, [7527671, 9742221]);
        assert_eq!(s.basic_info["nomenclature"], "Guanylyl cyclase, 21");
    }

    #[test]
    fn page_without_sections() {
        let s = summarize_page(r#"<html><body data-page="x"><dl data-basic-info></dl></body></html>"#).unwrap();
        assert!(s.data_headers.is_empty() && s.references.is_empty() && s.basic_info.is_empty());
    }

    #[test]
    fn contract_attributes_are_required() {
        assert!(summarize_page("<html><body><p>hi</p></body></html>").is_err());
        assert!(summarize_page(r#"<html><body data-page="x"></body></html>"#).is_err());
    }

    #[test]
    fn new_sorts_and_dedups() {
        let s = PageSummary::new(BTreeMap::new(), ["b".into(), "a".into(), "b".into()], [9742221, 7527671, 9742221]);
        assert_eq!(s.data_headers, ["a", "b"]);
        assert_eq!(s.references, [7527671, 9742221]);
    }

    #[test]
    fn diff_directions() {
        let a = summarize_page(PAGE).unwrap();
        assert!(compare(&a, &a).is_empty());
        let mut b = a.clone();
        b.data_headers.retain(|h| h != "Diseases");
        b.references.push(1);
        b.basic_info.insert("name".into(), "other".into());
        let d = compare(&a, &b);
        assert_eq!(d.missing_headers, ["Diseases"]);
        assert_eq!(d.extra_refs, [1]);
        assert_eq!(d.basic_info_mismatches.len(), 1);
        assert!(d.extra_headers.is_empty() && d.missing_refs.is_empty());
    }
}
