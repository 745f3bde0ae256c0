use std::fmt::Write as _;

use crate::ir::{PrimOp, Scalar};
use crate::normalize::{Generator, Term};

use super::{FlatBranch, FlatQuery};

/// Generated SQL in the generic dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlText {
    pub text: String,
}

/// Sole select item of a query without outputs; SQL has no empty select list.
pub const UNIT_COLUMN: &str = "NULL AS _unit";

fn select_list(items: Vec<String>) -> String {
    if items.is_empty() {
        UNIT_COLUMN.to_string()
    } else {
        items.join(", ")
    }
}

/// Renders a flat query as SQL: comma joins, `t0, t1, ...` aliases in
/// generator order, and `UNION ALL` between branches.
pub fn to_sql(q: &FlatQuery) -> SqlText {
    let labels = q.output_labels();
    let text = if q.branches.is_empty() {
        let types = q.output_types();
        let items: Vec<String> =
            labels.iter().zip(types).map(|(l, t)| format!("{} AS {l}", literal(&t.placeholder()))).collect();
        format!("SELECT {} WHERE FALSE", select_list(items))
    } else {
        q.branches.iter().map(|b| branch_sql(b, &labels)).collect::<Vec<_>>().join("\nUNION ALL\n")
    };
    SqlText { text }
}

struct Aliases {
    map: Vec<(String, String)>,
    next: usize,
}

impl Aliases {
    fn bind(&mut self, gens: &[Generator]) -> Vec<String> {
        gens.iter()
            .map(|g| {
                let alias = format!("t{}", self.next);
                self.next += 1;
                self.map.push((g.binder.clone(), alias.clone()));
                format!("{} AS {alias}", g.table)
            })
            .collect()
    }

    fn lookup<'a>(&'a self, binder: &'a str) -> &'a str {
        self.map.iter().rev().find(|(b, _)| b == binder).map(|(_, a)| a.as_str()).unwrap_or(binder)
    }
}

fn branch_sql(b: &FlatBranch, labels: &[String]) -> String {
    let mut aliases = Aliases { map: Vec::new(), next: 0 };
    let from = aliases.bind(&b.generators);
    let items: Vec<String> =
        b.select.iter().chain(&b.index).zip(labels).map(|(t, l)| format!("{} AS {l}", term(t, &mut aliases))).collect();
    let mut out = format!("SELECT {}", select_list(items));
    if !from.is_empty() {
        let _ = write!(out, " FROM {}", from.join(", "));
    }
    let _ = write!(out, " WHERE {}", term(&b.predicate, &mut aliases));
    out
}

pub(crate) fn literal(s: &Scalar) -> String {
    match s {
        Scalar::Int(i) => i.to_string(),
        Scalar::Float(x) => format!("{x:?}"),
        Scalar::Bool(true) => "TRUE".to_string(),
        Scalar::Bool(false) => "FALSE".to_string(),
        Scalar::Str(s) => format!("'{}'", s.replace('\'', "''")),
    }
}

fn op_sql(op: PrimOp) -> &'static str {
    match op {
        PrimOp::Eq => "=",
        PrimOp::Ne => "<>",
        PrimOp::Lt => "<",
        PrimOp::Le => "<=",
        PrimOp::Gt => ">",
        PrimOp::Ge => ">=",
        PrimOp::And => "AND",
        PrimOp::Or => "OR",
        PrimOp::Not => "NOT",
        PrimOp::Add => "+",
        PrimOp::Sub => "-",
        PrimOp::Mul => "*",
        PrimOp::Div => "/",
    }
}

fn operand(t: &Term, aliases: &mut Aliases) -> String {
    match t {
        Term::Prim(op, _) if *op != PrimOp::Not => format!("({})", term(t, aliases)),
        Term::Const(Scalar::Int(i)) if *i < 0 => format!("({i})"),
        _ => term(t, aliases),
    }
}

fn term(t: &Term, aliases: &mut Aliases) -> String {
    match t {
        Term::Const(c) => literal(c),
        Term::Field { var, column } => format!("{}.{column}", aliases.lookup(var)),
        Term::Prim(PrimOp::Not, args) => format!("NOT {}", operand(&args[0], aliases)),
        Term::Prim(op, args) => {
            format!("{} {} {}", operand(&args[0], aliases), op_sql(*op), operand(&args[1], aliases))
        }
        Term::If(c, a, b) => {
            format!("CASE WHEN {} THEN {} ELSE {} END", term(c, aliases), term(a, aliases), term(b, aliases))
        }
        Term::Exists(q) => {
            let depth = aliases.map.len();
            let from = aliases.bind(&q.generators);
            let mut s = String::from("EXISTS (SELECT 1");
            if !from.is_empty() {
                let _ = write!(s, " FROM {}", from.join(", "));
            }
            let _ = write!(s, " WHERE {})", term(&q.predicate, aliases));
            aliases.map.truncate(depth);
            s
        }
    }
}
