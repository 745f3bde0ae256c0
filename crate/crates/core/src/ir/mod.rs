//! The typed comprehension query calculus: schemas, expressions and typechecking.

mod expr;
mod typecheck;
mod types;

pub use expr::{build, free_vars, fresh_name, substitute, substitute_many, Expr, PrimOp};
pub use typecheck::{typecheck, typecheck_in, Env};
pub use types::{collection_count, Catalog, Column, QueryType, Scalar, ScalarType, TableSchema};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("unbound variable `{name}` at {path}")]
    UnboundVariable { name: String, path: String },
    #[error("unknown table `{name}` at {path}")]
    UnknownTable { name: String, path: String },
    #[error("unknown field `{field}` at {path}")]
    UnknownField { field: String, path: String },
    #[error("type mismatch at {path}: expected {expected}, found {found}")]
    TypeMismatch { expected: String, found: String, path: String },
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("invalid schema document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("table `{0}` declared twice")]
    DuplicateTable(String),
    #[error("table `{table}` declares column `{column}` twice")]
    DuplicateColumn { table: String, column: String },
    #[error("table `{0}` has an empty key")]
    EmptyKey(String),
    #[error("key column `{column}` of table `{table}` is not a column")]
    KeyNotAColumn { table: String, column: String },
}
