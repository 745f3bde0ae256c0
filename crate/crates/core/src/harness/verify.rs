//! Functional-correctness check: every sampled page's rendered summary must
//! match the summary computed from its model.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::app::{build_page, render_page, AppError, DiseaseFilter, FieldRef, Filter, Manifest, Page};
use crate::engine::{run_query, Backend, RequestMetrics};
use crate::ir::build::{for_in, table, var, yield_};
use crate::value::Value;

use super::summary::{compare, expected_summary, summarize_page, SummaryDiff};

/// Default number of entities checked per data page kind.
pub const DEFAULT_SAMPLE: usize = 150;

/// All values of `table.column`, ascending, fetched through the query engine.
pub fn entity_ids(backend: &dyn Backend, table_name: &str, column: &str) -> Result<Vec<i64>, AppError> {
    let q = for_in("x", table(table_name), yield_(var("x").field(column)));
    let v = run_query(&q, backend, &mut RequestMetrics::default())?;
    let mut ids: Vec<i64> = v.as_list().unwrap_or_default().iter().filter_map(Value::as_int).collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Up to `n` of `ids`, chosen by a seeded shuffle and returned ascending.
pub fn sample_ids(mut ids: Vec<i64>, n: usize, seed: u64) -> Vec<i64> {
    if ids.len() > n {
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        ids.truncate(n);
        ids.sort_unstable();
    }
    ids
}

/// Every list page plus a sample of data pages of each kind.
pub fn pages_to_check(backend: &dyn Backend, sample: usize, seed: u64) -> Result<Vec<Page>, AppError> {
    let mut pages: Vec<Page> = Filter::ALL.iter().map(|&f| Page::LigandList(f)).collect();
    pages.extend([DiseaseFilter::All, DiseaseFilter::Immuno].map(Page::DiseaseList));
    let objects = sample_ids(entity_ids(backend, "object", "object_id")?, sample, seed);
    let diseases = sample_ids(entity_ids(backend, "disease", "disease_id")?, sample, seed.wrapping_add(1));
    pages.extend(objects.into_iter().map(Page::Object));
    pages.extend(diseases.into_iter().map(Page::Disease));
    Ok(pages)
}

/// A page whose rendered summary differs from its expected one, or that failed to build.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub entity: String,
    pub page: String,
    pub diff: SummaryDiff,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Text fields the page displays.
    #[serde(skip)]
    pub fields: Vec<FieldRef>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checked: usize,
    pub failures: Vec<Failure>,
}

impl VerifyReport {
    /// JSON Lines, one failure per line.
    pub fn failures_jsonl(&self) -> String {
        self.failures.iter().map(|f| serde_json::to_string(f).expect("failure serializes") + "\n").collect()
    }

    /// Failures showing no field the manifest lists as deliberately malformed.
    pub fn untraced<'a>(&'a self, manifest: Option<&Manifest>) -> Vec<&'a Failure> {
        let flagged: BTreeSet<&FieldRef> = manifest.map(|m| m.malformed.iter().collect()).unwrap_or_default();
        self.failures.iter().filter(|f| !f.fields.iter().any(|r| flagged.contains(r))).collect()
    }
}

/// Builds, renders and summarizes one page, returning a failure if the summaries differ.
pub fn check_page(page: &Page, backend: &dyn Backend) -> Option<Failure> {
    let fail = |diff, error, fields| Failure { entity: page.param(), page: page.kind().into(), diff, error, fields };
    let model = match build_page(page, backend, &mut RequestMetrics::default()) {
        Ok(m) => m,
        Err(e) => return Some(fail(SummaryDiff::default(), Some(e.to_string()), vec![])),
    };
    let fields: Vec<FieldRef> = model.texts.iter().map(|t| t.source.clone()).collect();
    let actual = match render_page(&model)
        .map_err(|e| e.to_string())
        .and_then(|h| summarize_page(&h).map_err(|e| e.to_string()))
    {
        Ok(s) => s,
        Err(e) => return Some(fail(SummaryDiff::default(), Some(e), fields)),
    };
    let diff = compare(&expected_summary(&model), &actual);
    (!diff.is_empty()).then(|| fail(diff, None, fields))
}

pub fn verify(backend: &dyn Backend, sample: usize, seed: u64) -> Result<VerifyReport, AppError> {
    let pages = pages_to_check(backend, sample, seed)?;
    let failures = pages.iter().filter_map(|p| check_page(p, backend)).collect();
    Ok(VerifyReport { checked: pages.len(), failures })
}
