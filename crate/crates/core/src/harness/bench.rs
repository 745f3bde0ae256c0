//! Benchmark runner: repeated page requests summarised per page and across entities.

use std::collections::BTreeMap;
use std::thread;

use serde::Serialize;

use crate::app::{App, Page};
use crate::engine::MetricsRecord;

use super::stats::{mean, Stats};

pub const METRICS: [&str; 4] = ["query_count", "query_time", "build_time_excl", "build_time_incl"];

/// Label of rows that aggregate across all entities or filters of a page kind.
pub const ACROSS: &str = "*";

pub fn metric(r: &MetricsRecord, name: &str) -> f64 {
    match name {
        "query_count" => r.query_count as f64,
        "query_time" => r.query_time,
        "build_time_excl" => r.build_time_excl,
        "build_time_incl" => r.build_time_incl,
        other => panic!("unknown metric `{other}`"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    pub iterations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { iterations: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub page: String,
    pub param: String,
    pub record: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub page: String,
    pub param: String,
    pub metric: String,
    pub median: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub small_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub iterations: usize,
    pub note: String,
    pub rows: Vec<BenchRow>,
    pub samples: Vec<Sample>,
    /// Set when a request failed and the run stopped early.
    pub partial: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const NOTE: &str = "Rows with a concrete param summarise that page's iterations. \
Rows with param `*` summarise the per-entity means across entities (data pages) or filters (list pages). \
Medians are lower medians; std_dev is the sample standard deviation and small_sample marks n < 3. \
Times are in milliseconds.";

impl BenchReport {
    pub fn row(&self, page: &str, param: &str, metric: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.page == page && r.param == param && r.metric == metric)
    }

    /// CSV with columns `page,param,metric,median,std_dev,min,max`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["page", "param", "metric", "median", "std_dev", "min", "max"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.page.clone(),
                r.param.clone(),
                r.metric.clone(),
                r.median.to_string(),
                r.std_dev.to_string(),
                r.min.to_string(),
                r.max.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn row(page: &str, param: &str, metric: &str, xs: &[f64]) -> Option<BenchRow> {
    let s = Stats::of(xs)?;
    Some(BenchRow {
        page: page.into(),
        param: param.into(),
        metric: metric.into(),
        median: s.median,
        std_dev: s.std_dev,
        min: s.min,
        max: s.max,
        n: s.n,
        small_sample: s.small_sample(),
    })
}

/// Summarises raw samples. A pure function of `samples`, in their order.
pub fn summarize(samples: &[Sample]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&MetricsRecord>> = BTreeMap::new();
    let mut order: Vec<(&str, &str)> = Vec::new();
    for s in samples {
        let key = (s.page.as_str(), s.param.as_str());
        if !groups.contains_key(&key) {
            order.push(key);
        }
        groups.entry(key).or_default().push(&s.record);
    }
    let mut kinds: Vec<&str> = Vec::new();
    for (kind, _) in &order {
        if !kinds.contains(kind) {
            kinds.push(kind);
        }
    }
    let mut rows = Vec::new();
    for kind in kinds {
        for m in METRICS {
            let means: Vec<f64> = order
                .iter()
                .filter(|(k, _)| *k == kind)
                .map(|key| mean(&groups[key].iter().map(|r| metric(r, m)).collect::<Vec<_>>()))
                .collect();
            rows.extend(row(kind, ACROSS, m, &means));
        }
        for key in order.iter().filter(|(k, _)| *k == kind) {
            for m in METRICS {
                let xs: Vec<f64> = groups[key].iter().map(|r| metric(r, m)).collect();
                rows.extend(row(kind, key.1, m, &xs));
            }
        }
    }
    rows
}

/// Requests each page `cfg.iterations` times, sequentially.
pub fn bench(app: &App, pages: &[Page], cfg: &BenchConfig) -> BenchReport {
    let mut samples = Vec::with_capacity(pages.len() * cfg.iterations);
    let mut error = None;
    'pages: for page in pages {
        for _ in 0..cfg.iterations {
            let (html, record) = app.request(page);
            if let Err(e) = html {
                error = Some(format!("{}: {e}", page.path()));
                break 'pages;
            }
            samples.push(Sample { page: page.kind().into(), param: page.param(), record });
        }
    }
    BenchReport {
        iterations: cfg.iterations,
        note: NOTE.into(),
        rows: summarize(&samples),
        samples,
        partial: error.is_some(),
        error,
    }
}

/// Issues `rounds` passes over `pages` from each of `threads` threads at once.
/// Returns the number of successful requests; timings are not reported.
pub fn load_test(app: &App, pages: &[Page], threads: usize, rounds: usize) -> usize {
    thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|_| s.spawn(|| (0..rounds).flat_map(|_| pages).filter(|p| app.request(p).0.is_ok()).count()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("load thread")).sum()
    })
}
