//! Page models: the data behind each page, gathered before any HTML is produced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

use crate::engine::{run_query, Backend, EngineError, RequestMetrics};
use crate::ir::{typecheck, Catalog, Expr, QueryType, TypeError};
use crate::tagtext::{collect_refs, parse_tagtext, RefList, Segment, TagTextError};
use crate::value::Value;

use super::queries::{self, DiseaseFilter, Filter};

/// A request for one of the four pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Page {
    LigandList(Filter),
    DiseaseList(DiseaseFilter),
    Object(i64),
    Disease(i64),
}

impl Page {
    /// Short page kind as used on the command line: `ligands`, `diseases`, `object`, `disease`.
    pub fn kind(&self) -> &'static str {
        match self {
            Page::LigandList(_) => "ligands",
            Page::DiseaseList(_) => "diseases",
            Page::Object(_) => "object",
            Page::Disease(_) => "disease",
        }
    }

    pub fn param(&self) -> String {
        match self {
            Page::LigandList(f) => f.slug().to_string(),
            Page::DiseaseList(f) => f.slug().to_string(),
            Page::Object(id) | Page::Disease(id) => id.to_string(),
        }
    }

    pub fn path(&self) -> String {
        match self {
            Page::LigandList(f) => format!("/ligands?filter={f}"),
            Page::DiseaseList(f) => format!("/diseases?filter={f}"),
            Page::Object(id) => format!("/object/{id}"),
            Page::Disease(id) => format!("/disease/{id}"),
        }
    }

    /// Parses a page kind and its parameter; a missing list filter means `all`.
    pub fn parse(kind: &str, param: Option<&str>) -> Result<Page, AppError> {
        let bad = |m: String| AppError::BadRequest(m);
        let id = |p: Option<&str>| -> Result<i64, AppError> {
            let p = p.ok_or_else(|| bad(format!("page `{kind}` needs an id")))?;
            p.parse().map_err(|_| bad(format!("`{p}` is not an id")))
        };
        match kind {
            "ligands" | "ligand-list" => Ok(Page::LigandList(
                param.unwrap_or("all").parse().map_err(|e: queries::UnknownFilter| bad(e.to_string()))?,
            )),
            "diseases" | "disease-list" => Ok(Page::DiseaseList(
                param.unwrap_or("all").parse().map_err(|e: queries::UnknownFilter| bad(e.to_string()))?,
            )),
            "object" => Ok(Page::Object(id(param)?)),
            "disease" => Ok(Page::Disease(id(param)?)),
            other => Err(bad(format!("unknown page `{other}`"))),
        }
    }

    /// The page's main query.
    pub fn main_query(&self) -> Expr {
        match *self {
            Page::LigandList(f) => queries::ligand_list(f),
            Page::DiseaseList(f) => queries::disease_list(f),
            Page::Object(id) => queries::object_page(id),
            Page::Disease(id) => queries::disease_page(id),
        }
    }

    /// Data pages run two lookup queries after the main one.
    pub fn has_lookups(&self) -> bool {
        matches!(self, Page::Object(_) | Page::Disease(_))
    }

    /// Type of everything the page fetches. Its collection count is the page's query count.
    pub fn result_type(&self, catalog: &Catalog) -> Result<QueryType, TypeError> {
        let main = typecheck(&self.main_query(), catalog)?;
        if !self.has_lookups() {
            return Ok(main);
        }
        Ok(QueryType::Record(vec![
            ("main".into(), main),
            ("references".into(), typecheck(&queries::reference_lookup(&[]), catalog)?),
            ("ligands".into(), typecheck(&queries::ligand_lookup(&[]), catalog)?),
        ]))
    }
}

impl fmt::Display for Page {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind(), self.param())
    }
}

#[derive(Debug, Error)]
pub enum AppError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    TagText(#[from] TagTextError),
    #[error("unexpected query result: {0}")]
    Shape(String),
}

/// Where a piece of curation text lives in the database.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct FieldRef {
    pub table: String,
    pub key: i64,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextField {
    pub source: FieldRef,
    pub raw: String,
    /// Strict parse; an error marks malformed text, which renders escaped and verbatim.
    pub parsed: Result<Vec<Segment>, TagTextError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub reference_id: i64,
    pub pubmed_id: i64,
    pub title: String,
    pub authors: String,
    pub year: i64,
}

/// Everything a page shows, fetched before rendering.
#[derive(Debug, Clone, PartialEq)]
pub struct PageModel {
    pub page: Page,
    /// Result of the main query: a list of records, of length 1 for data pages.
    pub data: Value,
    pub texts: Vec<TextField>,
    /// Every reference row fetched for the page, by reference id.
    pub references: BTreeMap<i64, Reference>,
    pub ligand_names: BTreeMap<i64, String>,
    /// Numbered list of references cited by well-formed text.
    pub refs: RefList,
}

fn shape(msg: &str) -> AppError {
    AppError::Shape(msg.to_string())
}

/// Reads a record's field of the given kind.
pub(crate) fn get<'v>(v: &'v Value, label: &str) -> Result<&'v Value, AppError> {
    v.field(label).ok_or_else(|| shape(label))
}

pub(crate) fn get_int(v: &Value, label: &str) -> Result<i64, AppError> {
    get(v, label)?.as_int().ok_or_else(|| shape(label))
}

pub(crate) fn get_str<'v>(v: &'v Value, label: &str) -> Result<&'v str, AppError> {
    get(v, label)?.as_str().ok_or_else(|| shape(label))
}

pub(crate) fn get_list<'v>(v: &'v Value, label: &str) -> Result<&'v [Value], AppError> {
    get(v, label)?.as_list().ok_or_else(|| shape(label))
}

fn tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<(Reference|Ligand) id=(\d+)/>").expect("valid pattern"))
}

/// Reference and ligand ids mentioned in raw text, found by pattern alone so
/// that malformed text still yields its ids.
pub fn scan_tag_ids(raw: &str) -> (Vec<i64>, Vec<i64>) {
    let (mut refs, mut ligs) = (Vec::new(), Vec::new());
    for c in tag_pattern().captures_iter(raw) {
        if let Ok(id) = c[2].parse() {
            if &c[1] == "Reference" {
                refs.push(id)
            } else {
                ligs.push(id)
            }
        }
    }
    (refs, ligs)
}

impl PageModel {
    /// The single main record of a data page.
    pub fn entity(&self) -> Result<&Value, AppError> {
        self.data.as_list().and_then(|l| l.first()).ok_or_else(|| shape("empty page data"))
    }

    pub fn rows(&self) -> &[Value] {
        self.data.as_list().unwrap_or_default()
    }

    pub fn text(&self, source: &FieldRef) -> Option<&TextField> {
        self.texts.iter().find(|t| &t.source == source)
    }
}

/// Text fields shown on a data page, in display order.
fn text_sources(page: &Page, entity: &Value) -> Result<Vec<(FieldRef, String)>, AppError> {
    let field = |table: &str, key: i64, column: &str, raw: &str| {
        (FieldRef { table: table.into(), key, column: column.into() }, raw.to_string())
    };
    let mut out = Vec::new();
    match page {
        Page::Object(id) => {
            out.push(field("object", *id, "overview_text", get_str(entity, "overview")?));
            for i in get_list(entity, "interactions")? {
                out.push(field("interaction", get_int(i, "id")?, "comments_text", get_str(i, "comments")?));
            }
        }
        Page::Disease(id) => out.push(field("disease", *id, "description_text", get_str(entity, "description")?)),
        _ => {}
    }
    Ok(out)
}

/// Runs the page's queries and assembles its model.
pub fn build_page(page: &Page, backend: &dyn Backend, metrics: &mut RequestMetrics) -> Result<PageModel, AppError> {
    let data = run_query(&page.main_query(), backend, metrics)?;
    let mut model = PageModel {
        page: *page,
        data,
        texts: Vec::new(),
        references: BTreeMap::new(),
        ligand_names: BTreeMap::new(),
        refs: RefList::default(),
    };
    if !page.has_lookups() {
        return Ok(model);
    }
    let entity = match model.data.as_list() {
        Some([e]) => e.clone(),
        Some([]) => return Err(AppError::NotFound(page.to_string())),
        _ => return Err(shape("data page matched more than one row")),
    };

    let mut ref_ids = BTreeSet::new();
    let mut ligand_ids = BTreeSet::new();
    for (source, raw) in text_sources(page, &entity)? {
        let (r, l) = scan_tag_ids(&raw);
        ref_ids.extend(r);
        ligand_ids.extend(l);
        let parsed = parse_tagtext(&raw);
        model.texts.push(TextField { source, raw, parsed });
    }

    let ref_ids: Vec<i64> = ref_ids.into_iter().collect();
    let ligand_ids: Vec<i64> = ligand_ids.into_iter().collect();
    for r in run_query(&queries::reference_lookup(&ref_ids), backend, metrics)?.as_list().unwrap_or_default() {
        let reference = Reference {
            reference_id: get_int(r, "reference_id")?,
            pubmed_id: get_int(r, "pubmed_id")?,
            title: get_str(r, "title")?.to_string(),
            authors: get_str(r, "authors")?.to_string(),
            year: get_int(r, "year")?,
        };
        model.references.insert(reference.reference_id, reference);
    }
    for l in run_query(&queries::ligand_lookup(&ligand_ids), backend, metrics)?.as_list().unwrap_or_default() {
        model.ligand_names.insert(get_int(l, "ligand_id")?, get_str(l, "name")?.to_string());
    }

    let parsed: Vec<&[Segment]> = model.texts.iter().filter_map(|t| t.parsed.as_deref().ok()).collect();
    model.refs = collect_refs(parsed, |id| model.references.get(&id).map(|r| r.pubmed_id))?;
    Ok(model)
}

/// Boolean field of a list row.
pub(crate) fn get_bool(v: &Value, label: &str) -> Result<bool, AppError> {
    get(v, label)?.as_bool().ok_or_else(|| shape(label))
}
