//! Compilation of normal forms with nested heads into flat queries.
//!
//! Every `Collection` occurrence in the result type becomes exactly one
//! [`FlatQuery`]. A query is a union of branches; each branch carries the
//! generators and predicates of all enclosing levels, so one flat query
//! answers a nested collection for every parent row at once. Rows are tied
//! to their parents through index columns built from the declared key
//! columns of the generators in scope.

mod sql;
mod stitch;

use std::fmt::Write as _;

use thiserror::Error;

use crate::ir::{Catalog, PrimOp, QueryType, ScalarType};
use crate::normalize::{Generator, Head, NormalForm, Term};

pub use sql::{to_sql, SqlText, UNIT_COLUMN};
pub use stitch::{stitch, FlatRow, StitchError};

/// Label prefix reserved for index columns in the SELECT list.
pub const INDEX_PREFIX: &str = "_ix_";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShredError {
    #[error("table `{0}` declares no key, so rows cannot be indexed")]
    MissingKey(String),
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("result type {0} is not a collection")]
    NotACollection(QueryType),
    #[error("head does not match result type at `{0}`")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputColumn {
    pub label: String,
    pub ty: ScalarType,
}

/// One arm of a flat query's `UNION ALL`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatBranch {
    pub generators: Vec<Generator>,
    pub predicate: Term,
    /// Aligned with [`FlatQuery::columns`].
    pub select: Vec<Term>,
    /// Aligned with [`FlatQuery::index_slots`]; the first `parent_width` entries are the parent's index.
    pub index: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatQuery {
    pub parent: Option<usize>,
    pub columns: Vec<OutputColumn>,
    pub index_slots: Vec<ScalarType>,
    pub parent_width: usize,
    pub branches: Vec<FlatBranch>,
}

impl FlatQuery {
    /// SELECT labels in output order: data columns, then index columns.
    pub fn output_labels(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| c.label.clone())
            .chain((0..self.index_slots.len()).map(|i| format!("{INDEX_PREFIX}{i}")))
            .collect()
    }

    pub fn output_types(&self) -> Vec<ScalarType> {
        self.columns.iter().map(|c| c.ty).chain(self.index_slots.iter().copied()).collect()
    }

    pub fn index_range(&self) -> std::ops::Range<usize> {
        self.columns.len()..self.columns.len() + self.index_slots.len()
    }

    pub fn parent_index_range(&self) -> std::ops::Range<usize> {
        self.columns.len()..self.columns.len() + self.parent_width
    }
}

impl FlatBranch {
    pub fn index_cols(&self) -> &[Term] {
        &self.index
    }
}

/// How a collection's elements are rebuilt from its feeding query's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchNode {
    pub query: usize,
    pub element: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Scalar read from the given data column.
    Column(usize),
    Record(Vec<(String, Shape)>),
    Child(Box<StitchNode>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShredPlan {
    pub queries: Vec<FlatQuery>,
    pub stitch: StitchNode,
    pub result_type: QueryType,
}

/// A branch under construction, with everything inherited from enclosing levels.
struct Context<'n> {
    generators: Vec<Generator>,
    own_from: usize,
    predicate: Term,
    parent_index: Vec<Term>,
    head: &'n Head,
}

struct Shredder<'c> {
    catalog: &'c Catalog,
    queries: Vec<Option<FlatQuery>>,
}

/// Compiles `nf` of type `result_type` into one flat query per collection in the type.
pub fn shred(nf: &NormalForm, result_type: &QueryType, catalog: &Catalog) -> Result<ShredPlan, ShredError> {
    let element = result_type.element().ok_or_else(|| ShredError::NotACollection(result_type.clone()))?;
    let contexts = nf
        .branches
        .iter()
        .map(|c| Context {
            generators: c.generators.clone(),
            own_from: 0,
            predicate: c.predicate.clone(),
            parent_index: Vec::new(),
            head: &c.head,
        })
        .collect();
    let mut s = Shredder { catalog, queries: Vec::new() };
    let stitch = s.collection(contexts, element, None, Vec::new())?;
    let queries = s.queries.into_iter().map(|q| q.expect("every query filled")).collect();
    Ok(ShredPlan { queries, stitch, result_type: result_type.clone() })
}

fn conj(a: &Term, b: &Term) -> Term {
    Term::prim(PrimOp::And, vec![a.clone(), b.clone()])
}

/// Walks the element type in order, recording data columns and nested collections.
fn layout(ty: &QueryType, path: &str, columns: &mut Vec<OutputColumn>, children: &mut Vec<(String, QueryType)>) {
    match ty {
        QueryType::Scalar(s) => columns
            .push(OutputColumn { label: if path.is_empty() { "value".to_string() } else { path.to_string() }, ty: *s }),
        QueryType::Record(fields) => {
            for (l, t) in fields {
                let p = if path.is_empty() { l.clone() } else { format!("{path}__{l}") };
                layout(t, &p, columns, children);
            }
        }
        QueryType::Collection(_) => children.push((path.to_string(), ty.clone())),
    }
}

/// Finds the head subterm at a record path.
fn head_at<'h>(head: &'h Head, path: &str) -> Result<&'h Head, ShredError> {
    if path.is_empty() {
        return Ok(head);
    }
    let mut h = head;
    for seg in path.split("__") {
        h = match h {
            Head::Record(fields) => fields
                .iter()
                .find(|(l, _)| l == seg)
                .map(|(_, h)| h)
                .ok_or_else(|| ShredError::ShapeMismatch(path.to_string()))?,
            _ => return Err(ShredError::ShapeMismatch(path.to_string())),
        };
    }
    Ok(h)
}

impl Shredder<'_> {
    fn keys(&self, g: &Generator) -> Result<Vec<(Term, ScalarType)>, ShredError> {
        let schema = self.catalog.get(&g.table).ok_or_else(|| ShredError::UnknownTable(g.table.clone()))?;
        if schema.key.is_empty() {
            return Err(ShredError::MissingKey(g.table.clone()));
        }
        schema
            .key
            .iter()
            .map(|k| {
                let ty = schema.column_type(k).ok_or_else(|| ShredError::MissingKey(g.table.clone()))?;
                Ok((Term::Field { var: g.binder.clone(), column: k.clone() }, ty))
            })
            .collect()
    }

    fn collection(
        &mut self,
        contexts: Vec<Context<'_>>,
        element: &QueryType,
        parent: Option<usize>,
        parent_slots: Vec<ScalarType>,
    ) -> Result<StitchNode, ShredError> {
        let me = self.queries.len();
        self.queries.push(None);

        let mut columns = Vec::new();
        let mut children = Vec::new();
        layout(element, "", &mut columns, &mut children);

        // Own index extension, only needed when rows have nested collections.
        let mut slots = parent_slots.clone();
        let mut own_index: Vec<Vec<Term>> = contexts.iter().map(|_| Vec::new()).collect();
        if !children.is_empty() {
            let tagged = contexts.len() > 1;
            if tagged {
                slots.push(ScalarType::Int);
            }
            let keys = contexts
                .iter()
                .map(|c| {
                    c.generators[c.own_from..]
                        .iter()
                        .map(|g| self.keys(g))
                        .collect::<Result<Vec<_>, _>>()
                        .map(|v| v.into_iter().flatten().collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>, _>>()?;
            for k in &keys {
                slots.extend(k.iter().map(|(_, t)| *t));
            }
            for (ci, idx) in own_index.iter_mut().enumerate() {
                if tagged {
                    idx.push(Term::Const(crate::ir::Scalar::Int(ci as i64)));
                }
                for (cj, k) in keys.iter().enumerate() {
                    for (term, ty) in k {
                        idx.push(if ci == cj { term.clone() } else { Term::Const(ty.placeholder()) });
                    }
                }
            }
        }

        let mut branches = Vec::with_capacity(contexts.len());
        for (c, own) in contexts.iter().zip(own_index) {
            let mut select = Vec::with_capacity(columns.len());
            for col in &columns {
                let path = if col.label == "value" && matches!(element, QueryType::Scalar(_)) {
                    ""
                } else {
                    col.label.as_str()
                };
                match head_at(c.head, path)? {
                    Head::Term(t) => select.push(t.clone()),
                    _ => return Err(ShredError::ShapeMismatch(col.label.clone())),
                }
            }
            let mut index = c.parent_index.clone();
            index.extend(own);
            branches.push(FlatBranch {
                generators: c.generators.clone(),
                predicate: c.predicate.clone(),
                select,
                index,
            });
        }

        let mut child_nodes = Vec::with_capacity(children.len());
        for (path, cty) in &children {
            let mut child_contexts = Vec::new();
            for (c, b) in contexts.iter().zip(&branches) {
                let nf = match head_at(c.head, path)? {
                    Head::Nested(nf) => nf,
                    _ => return Err(ShredError::ShapeMismatch(path.clone())),
                };
                for inner in &nf.branches {
                    let mut generators = c.generators.clone();
                    generators.extend(inner.generators.iter().cloned());
                    child_contexts.push(Context {
                        own_from: c.generators.len(),
                        generators,
                        predicate: conj(&c.predicate, &inner.predicate),
                        parent_index: b.index.clone(),
                        head: &inner.head,
                    });
                }
            }
            let child_el = cty.element().expect("collection");
            let node = self.collection(child_contexts, child_el, Some(me), slots.clone())?;
            child_nodes.push((path.clone(), node));
        }

        let shape = build_shape(element, "", &columns, &mut child_nodes.into_iter().map(Some).collect::<Vec<_>>());
        self.queries[me] =
            Some(FlatQuery { parent, columns, index_slots: slots, parent_width: parent_slots.len(), branches });
        Ok(StitchNode { query: me, element: shape })
    }
}

fn build_shape(
    ty: &QueryType,
    path: &str,
    columns: &[OutputColumn],
    children: &mut [Option<(String, StitchNode)>],
) -> Shape {
    match ty {
        QueryType::Scalar(_) => {
            let label = if path.is_empty() { "value" } else { path };
            Shape::Column(columns.iter().position(|c| c.label == label).expect("column laid out"))
        }
        QueryType::Record(fields) => Shape::Record(
            fields
                .iter()
                .map(|(l, t)| {
                    let p = if path.is_empty() { l.clone() } else { format!("{path}__{l}") };
                    (l.clone(), build_shape(t, &p, columns, children))
                })
                .collect(),
        ),
        QueryType::Collection(_) => {
            let slot = children.iter_mut().find(|c| c.as_ref().is_some_and(|(p, _)| p == path)).expect("child planned");
            let (_, node) = slot.take().expect("child used once");
            Shape::Child(Box::new(node))
        }
    }
}

impl ShredPlan {
    pub fn sql(&self) -> Vec<SqlText> {
        self.queries.iter().map(to_sql).collect()
    }

    /// SQL text of every flat query followed by the stitch tree.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        for (i, q) in self.queries.iter().enumerate() {
            match q.parent {
                None => {
                    let _ = writeln!(out, "-- query {i} (root)");
                }
                Some(p) => {
                    let _ = writeln!(out, "-- query {i} (child of query {p})");
                }
            }
            let _ = writeln!(out, "{};", to_sql(q).text);
            out.push('\n');
        }
        out.push_str("-- stitch\n");
        explain_node(&self.stitch, &self.queries, 0, &mut out);
        out
    }
}

fn explain_node(node: &StitchNode, queries: &[FlatQuery], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    let _ = writeln!(out, "{pad}collection <- query {}", node.query);
    explain_shape(&node.element, &queries[node.query], queries, depth + 1, out);
}

fn explain_shape(shape: &Shape, q: &FlatQuery, queries: &[FlatQuery], depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match shape {
        Shape::Column(i) => {
            let _ = writeln!(out, "{pad}column {}", q.columns[*i].label);
        }
        Shape::Record(fields) => {
            for (l, s) in fields {
                let _ = writeln!(out, "{pad}{l}:");
                explain_shape(s, q, queries, depth + 1, out);
            }
        }
        Shape::Child(node) => explain_node(node, queries, depth, out),
    }
}
