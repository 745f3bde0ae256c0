use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ir::Scalar;
use crate::value::Value;

use super::{Shape, ShredPlan, StitchNode};

/// One result row of a flat query, aligned with [`super::FlatQuery::output_labels`].
pub type FlatRow = Vec<Scalar>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StitchError {
    #[error("expected results for {expected} queries, got {found}")]
    ResultCount { expected: usize, found: usize },
    #[error("query {query} returned a row of width {found}, expected {expected}")]
    RowWidth { query: usize, expected: usize, found: usize },
    #[error("row of query {query} has parent index {parent_index:?} matching no parent row")]
    OrphanRow { query: usize, parent_index: Vec<Scalar> },
}

type Groups = HashMap<Vec<Scalar>, Vec<usize>>;

/// Rebuilds the nested result from the per-query flat rows.
pub fn stitch(plan: &ShredPlan, results: &[Vec<FlatRow>]) -> Result<Value, StitchError> {
    if results.len() != plan.queries.len() {
        return Err(StitchError::ResultCount { expected: plan.queries.len(), found: results.len() });
    }
    for (i, (q, rows)) in plan.queries.iter().zip(results).enumerate() {
        let width = q.columns.len() + q.index_slots.len();
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(StitchError::RowWidth { query: i, expected: width, found: r.len() });
        }
    }

    // Child rows grouped by parent index, keeping result order within each group.
    let mut groups: Vec<Groups> = Vec::with_capacity(plan.queries.len());
    for (q, rows) in plan.queries.iter().zip(results) {
        let mut g: Groups = HashMap::new();
        if q.parent.is_some() {
            let range = q.parent_index_range();
            for (i, r) in rows.iter().enumerate() {
                g.entry(r[range.clone()].to_vec()).or_default().push(i);
            }
        }
        groups.push(g);
    }
    for (i, q) in plan.queries.iter().enumerate() {
        let Some(p) = q.parent else { continue };
        let parent_range = plan.queries[p].index_range();
        let parents: HashSet<&[Scalar]> = results[p].iter().map(|r| &r[parent_range.clone()]).collect();
        if let Some(orphan) = groups[i].keys().find(|k| !parents.contains(k.as_slice())) {
            return Err(StitchError::OrphanRow { query: i, parent_index: orphan.clone() });
        }
    }

    let s = Stitcher { plan, results, groups };
    let rows: Vec<usize> = (0..results[plan.stitch.query].len()).collect();
    Ok(s.collection(&plan.stitch, &rows))
}

struct Stitcher<'a> {
    plan: &'a ShredPlan,
    results: &'a [Vec<FlatRow>],
    groups: Vec<Groups>,
}

impl Stitcher<'_> {
    fn collection(&self, node: &StitchNode, rows: &[usize]) -> Value {
        Value::List(rows.iter().map(|&r| self.element(node, &node.element, r)).collect())
    }

    fn element(&self, node: &StitchNode, shape: &Shape, row: usize) -> Value {
        let data = &self.results[node.query][row];
        match shape {
            Shape::Column(i) => Value::from(&data[*i]),
            Shape::Record(fields) => {
                Value::Record(fields.iter().map(|(l, s)| (l.clone(), self.element(node, s, row))).collect())
            }
            Shape::Child(child) => {
                let key = &data[self.plan.queries[node.query].index_range()];
                let rows = self.groups[child.query].get(key).map(Vec::as_slice).unwrap_or(&[]);
                self.collection(child, rows)
            }
        }
    }
}
