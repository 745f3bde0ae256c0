//! Language-integrated nested queries over a relational store.
//!
//! Queries are written as comprehensions ([`ir::Expr`]), typechecked,
//! normalized ([`normalize`]) and shredded ([`shred`]) into a number of flat
//! SQL queries fixed by the result type, never by the data. [`engine`]
//! executes them and stitches the nested result back together. [`app`] is a
//! small pharmacology site built on top, and [`harness`] checks and
//! benchmarks it.

pub mod app;
pub mod cli;
pub mod engine;
pub mod harness;
pub mod ir;
pub mod normalize;
pub mod shred;
pub mod tagtext;
pub mod value;

pub use engine::{eval_direct, run_query, Backend, Database, RequestMetrics};
pub use ir::{build, typecheck, Catalog, Expr, QueryType};
pub use normalize::normalize;
pub use shred::shred;
pub use value::Value;
