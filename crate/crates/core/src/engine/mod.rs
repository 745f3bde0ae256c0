//! Query execution: the in-memory store, the direct evaluator used as the
//! reference semantics, the flat-query executor, backends and metrics.

mod backend;
mod db;
mod eval;
mod exec;
mod metrics;

use std::time::Instant;

use thiserror::Error;

use crate::ir::{typecheck, Expr, QueryType, SchemaError};
use crate::normalize::{normalize_typed, NormalForm, NormalizeError};
use crate::shred::{shred, stitch, ShredError, ShredPlan, StitchError};
use crate::value::Value;

pub use backend::{Backend, SqliteBackend};
pub use db::{load_database, Database, Table};
pub use eval::{eval_direct, eval_naive};
pub use exec::exec_flat;
pub use metrics::{ms, MetricsCollector, MetricsRecord, QueryStats, RequestMetrics};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeQueryError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in `{0}`")]
    Overflow(&'static str),
    /// Only reachable for expressions that do not typecheck.
    #[error("ill-typed query: {0}")]
    IllTyped(String),
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{table}.csv line {line}, column `{column}`: {msg}")]
    Parse { table: String, line: usize, column: String, msg: String },
    #[error("table `{table}`: {reason}")]
    SchemaViolation { table: String, reason: String },
    #[error("duplicate key ({key}) in table `{table}`")]
    DuplicateKey { table: String, key: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Shred(#[from] ShredError),
    #[error(transparent)]
    Runtime(#[from] RuntimeQueryError),
    #[error(transparent)]
    Stitch(#[from] StitchError),
    #[error("backend: {0}")]
    Backend(String),
}

impl From<rusqlite::Error> for EngineError {
    fn from(e: rusqlite::Error) -> Self {
        EngineError::Backend(e.to_string())
    }
}

impl From<crate::ir::TypeError> for EngineError {
    fn from(e: crate::ir::TypeError) -> Self {
        EngineError::Normalize(e.into())
    }
}

/// A query taken through the compile pipeline, ready to execute.
#[derive(Debug, Clone)]
pub struct CompiledQuery {
    pub ty: QueryType,
    pub normal_form: NormalForm,
    pub rewrite_steps: usize,
    pub plan: ShredPlan,
}

/// Typechecks, normalizes and shreds `e` against the backend's schemas.
pub fn compile(e: &Expr, backend: &dyn Backend) -> Result<CompiledQuery, EngineError> {
    let ty = typecheck(e, backend.catalog())?;
    let (normal_form, rewrite_steps) = normalize_typed(e, &ty)?;
    let plan = shred(&normal_form, &ty, backend.catalog())?;
    Ok(CompiledQuery { ty, normal_form, rewrite_steps, plan })
}

/// Runs the whole pipeline: compile, execute each flat query, stitch.
/// Adds one [`QueryStats`] entry to `metrics` covering all of it.
pub fn run_query(e: &Expr, backend: &dyn Backend, metrics: &mut RequestMetrics) -> Result<Value, EngineError> {
    let start = Instant::now();
    let compiled = compile(e, backend)?;
    let results = compiled.plan.queries.iter().map(|q| backend.execute(q)).collect::<Result<Vec<_>, _>>()?;
    let value = stitch(&compiled.plan, &results)?;
    metrics.queries.push(QueryStats { flat_queries: compiled.plan.queries.len(), elapsed: start.elapsed() });
    Ok(value)
}
