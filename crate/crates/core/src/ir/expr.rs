use std::collections::BTreeSet;
use std::fmt;

use super::types::{QueryType, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Add,
    Sub,
    Mul,
    Div,
}

impl PrimOp {
    pub fn symbol(self) -> &'static str {
        match self {
            PrimOp::Eq => "==",
            PrimOp::Ne => "!=",
            PrimOp::Lt => "<",
            PrimOp::Le => "<=",
            PrimOp::Gt => ">",
            PrimOp::Ge => ">=",
            PrimOp::And => "&&",
            PrimOp::Or => "||",
            PrimOp::Not => "not",
            PrimOp::Add => "+",
            PrimOp::Sub => "-",
            PrimOp::Mul => "*",
            PrimOp::Div => "/",
        }
    }

    pub fn arity(self) -> usize {
        if self == PrimOp::Not {
            1
        } else {
            2
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, PrimOp::Eq | PrimOp::Ne | PrimOp::Lt | PrimOp::Le | PrimOp::Gt | PrimOp::Ge)
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, PrimOp::Add | PrimOp::Sub | PrimOp::Mul | PrimOp::Div)
    }
}

/// The comprehension query calculus.
///
/// `Empty` carries the collection type it denotes; the normalizer produces
/// unannotated empties internally, which never reach the typechecker.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(Scalar),
    Table(String),
    For { binder: String, source: Box<Expr>, body: Box<Expr> },
    Where { cond: Box<Expr>, body: Box<Expr> },
    Singleton(Box<Expr>),
    Empty(Option<QueryType>),
    Concat(Box<Expr>, Box<Expr>),
    Record(Vec<(String, Expr)>),
    Project(Box<Expr>, String),
    IsEmpty(Box<Expr>),
    If { cond: Box<Expr>, then: Box<Expr>, otherwise: Box<Expr> },
    Prim(PrimOp, Vec<Expr>),
    Lambda { params: Vec<String>, body: Box<Expr> },
    Apply { func: Box<Expr>, args: Vec<Expr> },
}

impl Expr {
    /// `self.label`
    pub fn field(self, label: &str) -> Expr {
        Expr::Project(Box::new(self), label.to_string())
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var(_) | Expr::Const(_) | Expr::Table(_) | Expr::Empty(_) => vec![],
            Expr::For { source, body, .. } => vec![source, body],
            Expr::Where { cond, body } => vec![cond, body],
            Expr::Singleton(e) | Expr::IsEmpty(e) | Expr::Project(e, _) => vec![e],
            Expr::Concat(a, b) => vec![a, b],
            Expr::Record(fields) => fields.iter().map(|(_, e)| e).collect(),
            Expr::If { cond, then, otherwise } => vec![cond, then, otherwise],
            Expr::Prim(_, args) => args.iter().collect(),
            Expr::Lambda { body, .. } => vec![body],
            Expr::Apply { func, args } => std::iter::once(&**func).chain(args.iter()).collect(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    /// Every name bound or referenced anywhere in the expression.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_names(self, &mut out);
        out
    }

    /// Capture-avoiding substitution of `replacement` for free occurrences of `name`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        substitute_many(self, &[(name.to_string(), replacement.clone())])
    }
}

/// Free-function form of [`Expr::free_vars`].
pub fn free_vars(e: &Expr) -> BTreeSet<String> {
    e.free_vars()
}

/// Free-function form of [`Expr::substitute`].
pub fn substitute(e: &Expr, name: &str, replacement: &Expr) -> Expr {
    e.substitute(name, replacement)
}

fn collect_free(e: &Expr, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(n) => {
            if !bound.iter().any(|b| b == n) {
                out.insert(n.clone());
            }
        }
        Expr::For { binder, source, body } => {
            collect_free(source, bound, out);
            bound.push(binder.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Expr::Lambda { params, body } => {
            let n = params.len();
            bound.extend(params.iter().cloned());
            collect_free(body, bound, out);
            bound.truncate(bound.len() - n);
        }
        _ => {
            for c in e.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

fn collect_names(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(n) => {
            out.insert(n.clone());
        }
        Expr::For { binder, .. } => {
            out.insert(binder.clone());
        }
        Expr::Lambda { params, .. } => out.extend(params.iter().cloned()),
        _ => {}
    }
    for c in e.children() {
        collect_names(c, out);
    }
}

/// Picks `base` if it is not in `avoid`, otherwise `base_1`, `base_2`, ...
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem = base.rsplit_once('_').filter(|(_, n)| n.parse::<u32>().is_ok()).map_or(base, |(s, _)| s);
    (1..).map(|i| format!("{stem}_{i}")).find(|c| !avoid.contains(c)).expect("unbounded search")
}

/// Simultaneous capture-avoiding substitution.
pub fn substitute_many(e: &Expr, subst: &[(String, Expr)]) -> Expr {
    if subst.is_empty() {
        return e.clone();
    }
    match e {
        Expr::Var(n) => subst.iter().find(|(m, _)| m == n).map_or_else(|| e.clone(), |(_, r)| r.clone()),
        Expr::Const(_) | Expr::Table(_) | Expr::Empty(_) => e.clone(),
        Expr::For { binder, source, body } => {
            let source = substitute_many(source, subst);
            let (binders, body) = under_binders(std::slice::from_ref(binder), body, subst);
            Expr::For {
                binder: binders.into_iter().next().expect("one binder"),
                source: Box::new(source),
                body: Box::new(body),
            }
        }
        Expr::Lambda { params, body } => {
            let (params, body) = under_binders(params, body, subst);
            Expr::Lambda { params, body: Box::new(body) }
        }
        Expr::Where { cond, body } => {
            Expr::Where { cond: Box::new(substitute_many(cond, subst)), body: Box::new(substitute_many(body, subst)) }
        }
        Expr::Singleton(x) => Expr::Singleton(Box::new(substitute_many(x, subst))),
        Expr::IsEmpty(x) => Expr::IsEmpty(Box::new(substitute_many(x, subst))),
        Expr::Project(x, l) => Expr::Project(Box::new(substitute_many(x, subst)), l.clone()),
        Expr::Concat(a, b) => Expr::Concat(Box::new(substitute_many(a, subst)), Box::new(substitute_many(b, subst))),
        Expr::Record(fields) => {
            Expr::Record(fields.iter().map(|(l, x)| (l.clone(), substitute_many(x, subst))).collect())
        }
        Expr::If { cond, then, otherwise } => Expr::If {
            cond: Box::new(substitute_many(cond, subst)),
            then: Box::new(substitute_many(then, subst)),
            otherwise: Box::new(substitute_many(otherwise, subst)),
        },
        Expr::Prim(op, args) => Expr::Prim(*op, args.iter().map(|a| substitute_many(a, subst)).collect()),
        Expr::Apply { func, args } => Expr::Apply {
            func: Box::new(substitute_many(func, subst)),
            args: args.iter().map(|a| substitute_many(a, subst)).collect(),
        },
    }
}

fn under_binders(binders: &[String], body: &Expr, subst: &[(String, Expr)]) -> (Vec<String>, Expr) {
    // Shadowed names stop here.
    let live: Vec<(String, Expr)> = subst.iter().filter(|(n, _)| !binders.contains(n)).cloned().collect();
    if live.is_empty() {
        return (binders.to_vec(), body.clone());
    }
    let body_fv = body.free_vars();
    if !live.iter().any(|(n, _)| body_fv.contains(n)) {
        return (binders.to_vec(), body.clone());
    }
    let repl_fv: BTreeSet<String> = live.iter().flat_map(|(_, r)| r.free_vars()).collect();
    let mut avoid: BTreeSet<String> = repl_fv.clone();
    avoid.extend(body.all_names());
    avoid.extend(live.iter().map(|(n, _)| n.clone()));
    avoid.extend(binders.iter().cloned());

    let mut renamed = Vec::with_capacity(binders.len());
    let mut renaming = Vec::new();
    for b in binders {
        if repl_fv.contains(b) {
            let fresh = fresh_name(b, &avoid);
            avoid.insert(fresh.clone());
            renaming.push((b.clone(), Expr::Var(fresh.clone())));
            renamed.push(fresh);
        } else {
            renamed.push(b.clone());
        }
    }
    let body = if renaming.is_empty() { body.clone() } else { substitute_many(body, &renaming) };
    (renamed, substitute_many(&body, &live))
}

/// Constructors for writing queries in Rust with a shape close to comprehension syntax.
pub mod build {
    use super::*;

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn table(name: &str) -> Expr {
        Expr::Table(name.to_string())
    }

    pub fn lit<S: Into<Scalar>>(v: S) -> Expr {
        Expr::Const(v.into())
    }

    /// `for (binder <- source) body`
    pub fn for_in(binder: &str, source: Expr, body: Expr) -> Expr {
        Expr::For { binder: binder.to_string(), source: Box::new(source), body: Box::new(body) }
    }

    /// `where (cond) body`
    pub fn where_(cond: Expr, body: Expr) -> Expr {
        Expr::Where { cond: Box::new(cond), body: Box::new(body) }
    }

    /// `[e]`
    pub fn yield_(e: Expr) -> Expr {
        Expr::Singleton(Box::new(e))
    }

    pub fn empty(ty: QueryType) -> Expr {
        Expr::Empty(Some(ty))
    }

    pub fn concat(a: Expr, b: Expr) -> Expr {
        Expr::Concat(Box::new(a), Box::new(b))
    }

    pub fn record<I: IntoIterator<Item = (&'static str, Expr)>>(fields: I) -> Expr {
        Expr::Record(fields.into_iter().map(|(l, e)| (l.to_string(), e)).collect())
    }

    pub fn is_empty(e: Expr) -> Expr {
        Expr::IsEmpty(Box::new(e))
    }

    pub fn if_(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::If { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) }
    }

    pub fn prim(op: PrimOp, args: Vec<Expr>) -> Expr {
        Expr::Prim(op, args)
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Prim(PrimOp::Eq, vec![a, b])
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::Prim(PrimOp::And, vec![a, b])
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Prim(PrimOp::Or, vec![a, b])
    }

    pub fn not(a: Expr) -> Expr {
        Expr::Prim(PrimOp::Not, vec![a])
    }

    pub fn lambda(params: &[&str], body: Expr) -> Expr {
        Expr::Lambda { params: params.iter().map(|p| (*p).to_string()).collect(), body: Box::new(body) }
    }

    pub fn apply(func: Expr, args: Vec<Expr>) -> Expr {
        Expr::Apply { func: Box::new(func), args }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(n) => f.write_str(n),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Table(t) => f.write_str(t),
            Expr::For { binder, source, body } => {
                write!(f, "for ({binder} <- {source}) {body}")
            }
            Expr::Where { cond, body } => write!(f, "where ({cond}) {body}"),
            Expr::Singleton(e) => write!(f, "[{e}]"),
            Expr::Empty(_) => f.write_str("[]"),
            Expr::Concat(a, b) => write!(f, "({a} ++ {b})"),
            Expr::Record(fields) => {
                f.write_str("(")?;
                for (i, (l, e)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l} = {e}")?;
                }
                f.write_str(")")
            }
            Expr::Project(e, l) => write!(f, "{e}.{l}"),
            Expr::IsEmpty(e) => write!(f, "empty({e})"),
            Expr::If { cond, then, otherwise } => {
                write!(f, "if ({cond}) {then} else {otherwise}")
            }
            Expr::Prim(PrimOp::Not, args) => write!(f, "not({})", args[0]),
            Expr::Prim(op, args) => write!(f, "({} {} {})", args[0], op.symbol(), args[1]),
            Expr::Lambda { params, body } => write!(f, "fun({}) {{ {body} }}", params.join(", ")),
            Expr::Apply { func, args } => {
                write!(f, "({func})(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
