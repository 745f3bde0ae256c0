use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// One call of `run_query`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryStats {
    pub flat_queries: usize,
    /// Normalization, execution and stitching together.
    pub elapsed: Duration,
}

/// Metrics owned by a single request while its page is built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RequestMetrics {
    pub queries: Vec<QueryStats>,
}

impl RequestMetrics {
    pub fn query_count(&self) -> usize {
        self.queries.iter().map(|q| q.flat_queries).sum()
    }

    pub fn query_time(&self) -> Duration {
        self.queries.iter().map(|q| q.elapsed).sum()
    }

    /// Closes the request: `build` is the time from receipt to just before the response is sent.
    pub fn finish(&self, page: impl Into<String>, build: Duration) -> MetricsRecord {
        let query_time = ms(self.query_time());
        let incl = ms(build).max(query_time);
        MetricsRecord {
            page: page.into(),
            query_count: self.query_count(),
            query_time,
            build_time_excl: incl - query_time,
            build_time_incl: incl,
        }
    }
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

/// Per-request metrics; times are fractional milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub page: String,
    pub query_count: usize,
    pub query_time: f64,
    pub build_time_excl: f64,
    pub build_time_incl: f64,
}

/// Process-wide sink for finished requests. Safe to share across threads.
#[derive(Debug, Default)]
pub struct MetricsCollector {
    records: Mutex<Vec<MetricsRecord>>,
    sink: Option<Mutex<File>>,
}

impl MetricsCollector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also appends every record as a JSON line to `path`.
    pub fn with_file(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(MetricsCollector { records: Mutex::default(), sink: Some(Mutex::new(file)) })
    }

    pub fn record(&self, r: MetricsRecord) {
        if let Some(sink) = &self.sink {
            if let Ok(mut f) = sink.lock() {
                // A failed write loses the file copy only; the in-memory record is kept.
                let _ = writeln!(f, "{}", serde_json::to_string(&r).expect("record serializes"));
            }
        }
        self.records.lock().unwrap_or_else(|e| e.into_inner()).push(r);
    }

    pub fn records(&self) -> Vec<MetricsRecord> {
        self.records.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn to_jsonl(&self) -> String {
        self.records().iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}
