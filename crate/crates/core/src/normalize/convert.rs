//! Reads comprehensions off a fully rewritten expression, guided by its type.

use std::collections::BTreeSet;

use crate::ir::{fresh_name, Expr, PrimOp, QueryType, Scalar};

use super::rewrite::Rewriter;
use super::{Comprehension, ExistsQuery, Generator, Head, NormalForm, NormalizeError, Term};

struct RawComp {
    generators: Vec<Generator>,
    conds: Vec<Expr>,
    head: Expr,
}

pub(crate) struct Converter {
    pub(crate) rewriter: Rewriter,
    used: BTreeSet<String>,
    scope: Vec<String>,
}

impl Converter {
    pub(crate) fn new(rewriter: Rewriter) -> Self {
        Converter { rewriter, used: BTreeSet::new(), scope: Vec::new() }
    }

    pub(crate) fn normal_form(&mut self, e: &Expr, element: &QueryType) -> Result<NormalForm, NormalizeError> {
        let comps = self.comprehensions(e)?;
        let mut branches = Vec::with_capacity(comps.len());
        for c in comps {
            let depth = self.scope.len();
            self.scope.extend(c.generators.iter().map(|g| g.binder.clone()));
            let predicate = self.predicate(&c.conds);
            let head = predicate.and_then(|p| Ok((p, self.head(&c.head, element)?)));
            self.scope.truncate(depth);
            let (predicate, head) = head?;
            branches.push(Comprehension { generators: c.generators, predicate, head });
        }
        Ok(NormalForm { branches })
    }

    fn claim(&mut self, binder: &str) -> String {
        let name = fresh_name(binder, &self.used);
        self.used.insert(name.clone());
        name
    }

    fn comprehensions(&mut self, e: &Expr) -> Result<Vec<RawComp>, NormalizeError> {
        match e {
            Expr::Empty(_) => Ok(Vec::new()),
            Expr::Concat(a, b) => {
                let mut out = self.comprehensions(a)?;
                out.extend(self.comprehensions(b)?);
                Ok(out)
            }
            Expr::Singleton(h) => Ok(vec![RawComp { generators: Vec::new(), conds: Vec::new(), head: (**h).clone() }]),
            Expr::Where { cond, body } => {
                let mut comps = self.comprehensions(body)?;
                for c in &mut comps {
                    c.conds.insert(0, (**cond).clone());
                }
                Ok(comps)
            }
            Expr::For { binder, source, body } => {
                let table = match &**source {
                    Expr::Table(t) => t.clone(),
                    other => {
                        return Err(NormalizeError::NotTranslatable { construct: format!("generator over {other}") })
                    }
                };
                let name = self.claim(binder);
                let body =
                    if name == *binder { (**body).clone() } else { body.substitute(binder, &Expr::Var(name.clone())) };
                let mut comps = self.comprehensions(&body)?;
                for c in &mut comps {
                    c.generators.insert(0, Generator { binder: name.clone(), table: table.clone() });
                }
                Ok(comps)
            }
            Expr::Table(t) => {
                let name = self.claim("r");
                Ok(vec![RawComp {
                    generators: vec![Generator { binder: name.clone(), table: t.clone() }],
                    conds: Vec::new(),
                    head: Expr::Var(name),
                }])
            }
            other => Err(NormalizeError::NotTranslatable { construct: other.to_string() }),
        }
    }

    fn predicate(&mut self, conds: &[Expr]) -> Result<Term, NormalizeError> {
        let mut acc: Option<Term> = None;
        for c in conds {
            let t = self.term(c)?;
            acc = Some(match acc {
                None => t,
                Some(prev) => Term::Prim(PrimOp::And, vec![prev, t]),
            });
        }
        Ok(acc.unwrap_or(Term::Const(Scalar::Bool(true))))
    }

    fn head(&mut self, e: &Expr, ty: &QueryType) -> Result<Head, NormalizeError> {
        match ty {
            QueryType::Scalar(_) => Ok(Head::Term(self.term(e)?)),
            QueryType::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (label, fty) in fields {
                    let projected = match e {
                        Expr::Record(fs) => match fs.iter().find(|(l, _)| l == label) {
                            Some((_, v)) => v.clone(),
                            None => {
                                return Err(NormalizeError::NotTranslatable {
                                    construct: format!("record {e} lacks field `{label}`"),
                                })
                            }
                        },
                        _ => self.rewriter.norm(&e.clone().field(label))?,
                    };
                    out.push((label.clone(), self.head(&projected, fty)?));
                }
                Ok(Head::Record(out))
            }
            QueryType::Collection(element) => Ok(Head::Nested(self.normal_form(e, element)?)),
        }
    }

    fn term(&mut self, e: &Expr) -> Result<Term, NormalizeError> {
        match e {
            Expr::Const(c) => Ok(Term::Const(c.clone())),
            Expr::Project(x, column) => match &**x {
                Expr::Var(v) => {
                    if !self.scope.contains(v) {
                        return Err(NormalizeError::UnboundVariable(v.clone()));
                    }
                    Ok(Term::Field { var: v.clone(), column: column.clone() })
                }
                _ => Err(NormalizeError::NotTranslatable { construct: e.to_string() }),
            },
            Expr::Prim(op, args) => {
                let args = args.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                Ok(Term::prim(*op, args))
            }
            Expr::If { cond, then, otherwise } => {
                Ok(Term::If(Box::new(self.term(cond)?), Box::new(self.term(then)?), Box::new(self.term(otherwise)?)))
            }
            Expr::IsEmpty(q) => {
                let comps = self.comprehensions(q)?;
                let mut exists: Option<Term> = None;
                for c in comps {
                    let depth = self.scope.len();
                    self.scope.extend(c.generators.iter().map(|g| g.binder.clone()));
                    let predicate = self.predicate(&c.conds);
                    self.scope.truncate(depth);
                    let atom = Term::Exists(Box::new(ExistsQuery { generators: c.generators, predicate: predicate? }));
                    exists = Some(match exists {
                        None => atom,
                        Some(prev) => Term::Prim(PrimOp::Or, vec![prev, atom]),
                    });
                }
                Ok(match exists {
                    None => Term::Const(Scalar::Bool(true)),
                    Some(t) => Term::prim(PrimOp::Not, vec![t]),
                })
            }
            Expr::Var(v) if !self.scope.contains(v) => Err(NormalizeError::UnboundVariable(v.clone())),
            other => Err(NormalizeError::NotTranslatable { construct: other.to_string() }),
        }
    }
}
