//! Normalization of typechecked queries into unions of flat-generator comprehensions.
//!
//! Rewriting runs innermost-first to a fixed point under a step budget. The
//! rewritten expression is then read off into [`NormalForm`], guided by the
//! query's type: row variables in head position are expanded field by field,
//! and emptiness tests become `Exists` atoms.

mod convert;
mod rewrite;

use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ir::{build, typecheck, Catalog, Expr, PrimOp, QueryType, Scalar, TypeError};

use convert::Converter;
use rewrite::{step_budget, Rewriter};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("query result must be a collection, found {0}")]
    NotACollection(QueryType),
    #[error("cannot translate `{construct}` to normal form")]
    NotTranslatable { construct: String },
    #[error("unbound variable `{0}` during normalization")]
    UnboundVariable(String),
    #[error("normalization exceeded its budget of {budget} rewrite steps")]
    BudgetExceeded { budget: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub binder: String,
    pub table: String,
}

/// Scalar and boolean expressions over generator fields.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Const(Scalar),
    Field { var: String, column: String },
    Prim(PrimOp, Vec<Term>),
    If(Box<Term>, Box<Term>, Box<Term>),
    Exists(Box<ExistsQuery>),
}

/// Body of an `Exists` atom: a comprehension whose head is irrelevant.
#[derive(Debug, Clone, PartialEq)]
pub struct ExistsQuery {
    pub generators: Vec<Generator>,
    pub predicate: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Head {
    Term(Term),
    Record(Vec<(String, Head)>),
    Nested(NormalForm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comprehension {
    pub generators: Vec<Generator>,
    pub predicate: Term,
    pub head: Head,
}

/// A union of comprehensions, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NormalForm {
    pub branches: Vec<Comprehension>,
}

impl Term {
    /// Builds a primitive application, dropping double negations and `true` conjuncts.
    pub fn prim(op: PrimOp, mut args: Vec<Term>) -> Term {
        match op {
            PrimOp::Not => match args.pop().expect("one operand") {
                Term::Prim(PrimOp::Not, mut inner) => inner.pop().expect("one operand"),
                Term::Const(Scalar::Bool(b)) => Term::Const(Scalar::Bool(!b)),
                t => Term::Prim(PrimOp::Not, vec![t]),
            },
            PrimOp::And if args[0] == Term::Const(Scalar::Bool(true)) => args.pop().expect("two"),
            PrimOp::And if args[1] == Term::Const(Scalar::Bool(true)) => args.swap_remove(0),
            _ => Term::Prim(op, args),
        }
    }

    pub fn is_true(&self) -> bool {
        *self == Term::Const(Scalar::Bool(true))
    }

    /// Conjuncts of a predicate, flattening nested `&&`.
    pub fn conjuncts(&self) -> Vec<&Term> {
        match self {
            Term::Prim(PrimOp::And, args) => args.iter().flat_map(|a| a.conjuncts()).collect(),
            t if t.is_true() => Vec::new(),
            t => vec![t],
        }
    }

    /// Generator binders this term refers to, outside any `Exists` that binds them.
    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_vars(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        match self {
            Term::Const(_) => {}
            Term::Field { var, .. } => {
                if !bound.contains(var) && !out.contains(var) {
                    out.push(var.clone());
                }
            }
            Term::Prim(_, args) => args.iter().for_each(|a| a.collect_vars(bound, out)),
            Term::If(c, a, b) => {
                c.collect_vars(bound, out);
                a.collect_vars(bound, out);
                b.collect_vars(bound, out);
            }
            Term::Exists(q) => {
                let n = bound.len();
                bound.extend(q.generators.iter().map(|g| g.binder.clone()));
                q.predicate.collect_vars(bound, out);
                bound.truncate(n);
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        match self {
            Term::Const(c) => Expr::Const(c.clone()),
            Term::Field { var, column } => build::var(var).field(column),
            Term::Prim(op, args) => Expr::Prim(*op, args.iter().map(Term::to_expr).collect()),
            Term::If(c, a, b) => build::if_(c.to_expr(), a.to_expr(), b.to_expr()),
            Term::Exists(q) => {
                let body = build::where_(q.predicate.to_expr(), build::yield_(Expr::Record(vec![])));
                let inner = q
                    .generators
                    .iter()
                    .rev()
                    .fold(body, |acc, g| build::for_in(&g.binder, build::table(&g.table), acc));
                build::not(build::is_empty(inner))
            }
        }
    }
}

impl Head {
    fn to_expr(&self, ty: &QueryType) -> Expr {
        match (self, ty) {
            (Head::Term(t), _) => t.to_expr(),
            (Head::Record(fields), QueryType::Record(ftys)) => Expr::Record(
                fields
                    .iter()
                    .map(|(l, h)| {
                        let fty = ftys.iter().find(|(m, _)| m == l).map(|(_, t)| t).unwrap_or(ty);
                        (l.clone(), h.to_expr(fty))
                    })
                    .collect(),
            ),
            (Head::Nested(nf), t) => nf.to_expr(t),
            (Head::Record(fields), _) => Expr::Record(fields.iter().map(|(l, h)| (l.clone(), h.to_expr(ty))).collect()),
        }
    }
}

impl NormalForm {
    /// Embeds the normal form back into the query calculus. `ty` is its collection type.
    pub fn to_expr(&self, ty: &QueryType) -> Expr {
        let element = ty.element().cloned().unwrap_or_else(|| ty.clone());
        let mut parts = self.branches.iter().map(|c| {
            let body = build::yield_(c.head.to_expr(&element));
            let body = if c.predicate.is_true() { body } else { build::where_(c.predicate.to_expr(), body) };
            c.generators.iter().rev().fold(body, |acc, g| build::for_in(&g.binder, build::table(&g.table), acc))
        });
        match parts.next() {
            None => build::empty(ty.clone()),
            Some(first) => parts.fold(first, build::concat),
        }
    }

    /// Stable indented text form, used by golden tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        dump_nf(self, 0, &mut out);
        out
    }
}

/// Normalizes a query, typechecking it first.
pub fn normalize(e: &Expr, catalog: &Catalog) -> Result<NormalForm, NormalizeError> {
    normalize_with_stats(e, catalog).map(|(nf, _)| nf)
}

/// Like [`normalize`], also reporting the number of rewrite steps applied.
pub fn normalize_with_stats(e: &Expr, catalog: &Catalog) -> Result<(NormalForm, usize), NormalizeError> {
    let ty = typecheck(e, catalog)?;
    normalize_typed(e, &ty)
}

/// Normalizes an expression already known to have collection type `ty`.
pub fn normalize_typed(e: &Expr, ty: &QueryType) -> Result<(NormalForm, usize), NormalizeError> {
    let element = match ty {
        QueryType::Collection(el) => el.as_ref(),
        other => return Err(NormalizeError::NotACollection(other.clone())),
    };
    let mut rewriter = Rewriter::new(step_budget(e.size()));
    let rewritten = rewriter.norm(e)?;
    let mut converter = Converter::new(rewriter);
    let nf = converter.normal_form(&rewritten, element)?;
    Ok((nf, converter.rewriter.steps()))
}

/// Structural equality up to consistent renaming of generator binders.
pub fn nf_equal(a: &NormalForm, b: &NormalForm) -> bool {
    Alpha::default().nf(a, b)
}

#[derive(Default)]
struct Alpha {
    pairs: Vec<(String, String)>,
}

impl Alpha {
    fn nf(&mut self, a: &NormalForm, b: &NormalForm) -> bool {
        a.branches.len() == b.branches.len() && a.branches.iter().zip(&b.branches).all(|(x, y)| self.comp(x, y))
    }

    fn bind<T>(&mut self, ga: &[Generator], gb: &[Generator], f: impl FnOnce(&mut Self) -> T) -> Option<T> {
        if ga.len() != gb.len() || ga.iter().zip(gb).any(|(x, y)| x.table != y.table) {
            return None;
        }
        let n = self.pairs.len();
        self.pairs.extend(ga.iter().zip(gb).map(|(x, y)| (x.binder.clone(), y.binder.clone())));
        let out = f(self);
        self.pairs.truncate(n);
        Some(out)
    }

    fn comp(&mut self, a: &Comprehension, b: &Comprehension) -> bool {
        self.bind(&a.generators, &b.generators, |s| s.term(&a.predicate, &b.predicate) && s.head(&a.head, &b.head))
            .unwrap_or(false)
    }

    fn head(&mut self, a: &Head, b: &Head) -> bool {
        match (a, b) {
            (Head::Term(x), Head::Term(y)) => self.term(x, y),
            (Head::Record(fa), Head::Record(fb)) => {
                fa.len() == fb.len() && fa.iter().zip(fb).all(|((la, ha), (lb, hb))| la == lb && self.head(ha, hb))
            }
            (Head::Nested(x), Head::Nested(y)) => self.nf(x, y),
            _ => false,
        }
    }

    fn same_var(&self, x: &str, y: &str) -> bool {
        for (p, q) in self.pairs.iter().rev() {
            if p == x || q == y {
                return p == x && q == y;
            }
        }
        x == y
    }

    fn term(&mut self, a: &Term, b: &Term) -> bool {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Field { var: va, column: ca }, Term::Field { var: vb, column: cb }) => {
                ca == cb && self.same_var(va, vb)
            }
            (Term::Prim(oa, xa), Term::Prim(ob, xb)) => {
                oa == ob && xa.len() == xb.len() && xa.iter().zip(xb).all(|(x, y)| self.term(x, y))
            }
            (Term::If(c1, a1, b1), Term::If(c2, a2, b2)) => self.term(c1, c2) && self.term(a1, a2) && self.term(b1, b2),
            (Term::Exists(x), Term::Exists(y)) => {
                self.bind(&x.generators, &y.generators, |s| s.term(&x.predicate, &y.predicate)).unwrap_or(false)
            }
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Field { var, column } => write!(f, "{var}.{column}"),
            Term::Prim(PrimOp::Not, args) => write!(f, "not({})", args[0]),
            Term::Prim(op, args) => write!(f, "({} {} {})", args[0], op.symbol(), args[1]),
            Term::If(c, a, b) => write!(f, "(if {c} then {a} else {b})"),
            Term::Exists(q) => {
                f.write_str("exists(")?;
                for g in &q.generators {
                    write!(f, "for {} <- {} ", g.binder, g.table)?;
                }
                write!(f, "where {})", q.predicate)
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn dump_nf(nf: &NormalForm, depth: usize, out: &mut String) {
    if nf.branches.is_empty() {
        indent(out, depth);
        out.push_str("empty\n");
    }
    for c in &nf.branches {
        indent(out, depth);
        out.push_str("comprehension\n");
        for g in &c.generators {
            indent(out, depth + 1);
            let _ = writeln!(out, "for {} <- {}", g.binder, g.table);
        }
        indent(out, depth + 1);
        let _ = writeln!(out, "where {}", c.predicate);
        indent(out, depth + 1);
        out.push_str("head");
        dump_head(&c.head, depth + 2, out);
    }
}

fn dump_head(h: &Head, depth: usize, out: &mut String) {
    match h {
        Head::Term(t) => {
            let _ = writeln!(out, " {t}");
        }
        Head::Record(fields) => {
            out.push('\n');
            for (l, h) in fields {
                indent(out, depth);
                let _ = write!(out, "{l}:");
                dump_head(h, depth + 1, out);
            }
        }
        Head::Nested(nf) => {
            out.push('\n');
            dump_nf(nf, depth, out);
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}
