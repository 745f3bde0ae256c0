//! Innermost-first rewriting of query expressions to a fixed point.

use std::collections::BTreeSet;

use crate::ir::{fresh_name, substitute_many, Expr, PrimOp, Scalar};

use super::NormalizeError;

pub(crate) struct Rewriter {
    steps: usize,
    budget: usize,
}

/// Rule applications allowed for an expression of the given size.
pub(crate) fn step_budget(size: usize) -> usize {
    256 + 8 * size.pow(3)
}

fn bool_lit(e: &Expr) -> Option<bool> {
    match e {
        Expr::Const(Scalar::Bool(b)) => Some(*b),
        _ => None,
    }
}

/// Whether a normal expression denotes a collection, judged by its outermost constructor.
pub(crate) fn is_collection_shaped(e: &Expr) -> bool {
    match e {
        Expr::For { .. }
        | Expr::Where { .. }
        | Expr::Singleton(_)
        | Expr::Empty(_)
        | Expr::Concat(..)
        | Expr::Table(_) => true,
        Expr::If { then, otherwise, .. } => is_collection_shaped(then) || is_collection_shaped(otherwise),
        _ => false,
    }
}

impl Rewriter {
    pub(crate) fn new(budget: usize) -> Self {
        Rewriter { steps: 0, budget }
    }

    pub(crate) fn steps(&self) -> usize {
        self.steps
    }

    fn tick(&mut self) -> Result<(), NormalizeError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(NormalizeError::BudgetExceeded { budget: self.budget })
        } else {
            Ok(())
        }
    }

    pub(crate) fn norm(&mut self, e: &Expr) -> Result<Expr, NormalizeError> {
        let e = self.norm_children(e)?;
        match self.step(&e) {
            Some(next) => {
                self.tick()?;
                self.norm(&next)
            }
            None => Ok(e),
        }
    }

    fn norm_children(&mut self, e: &Expr) -> Result<Expr, NormalizeError> {
        let b = |r: &mut Self, x: &Expr| r.norm(x).map(Box::new);
        Ok(match e {
            Expr::Var(_) | Expr::Const(_) | Expr::Table(_) | Expr::Empty(_) => e.clone(),
            Expr::For { binder, source, body } => {
                Expr::For { binder: binder.clone(), source: b(self, source)?, body: b(self, body)? }
            }
            Expr::Where { cond, body } => Expr::Where { cond: b(self, cond)?, body: b(self, body)? },
            Expr::Singleton(x) => Expr::Singleton(b(self, x)?),
            Expr::Concat(x, y) => Expr::Concat(b(self, x)?, b(self, y)?),
            Expr::Record(fields) => Expr::Record(
                fields.iter().map(|(l, x)| Ok((l.clone(), self.norm(x)?))).collect::<Result<_, NormalizeError>>()?,
            ),
            Expr::Project(x, l) => Expr::Project(b(self, x)?, l.clone()),
            Expr::IsEmpty(x) => Expr::IsEmpty(b(self, x)?),
            Expr::If { cond, then, otherwise } => {
                Expr::If { cond: b(self, cond)?, then: b(self, then)?, otherwise: b(self, otherwise)? }
            }
            Expr::Prim(op, args) => Expr::Prim(*op, args.iter().map(|a| self.norm(a)).collect::<Result<_, _>>()?),
            Expr::Lambda { params, body } => Expr::Lambda { params: params.clone(), body: b(self, body)? },
            Expr::Apply { func, args } => {
                Expr::Apply { func: b(self, func)?, args: args.iter().map(|a| self.norm(a)).collect::<Result<_, _>>()? }
            }
        })
    }

    /// One rule application at the root, assuming all children are already normal.
    fn step(&self, e: &Expr) -> Option<Expr> {
        match e {
            // beta reduction
            Expr::Apply { func, args } => match &**func {
                Expr::Lambda { params, body } if params.len() == args.len() => {
                    let subst: Vec<(String, Expr)> = params.iter().cloned().zip(args.iter().cloned()).collect();
                    Some(substitute_many(body, &subst))
                }
                _ => None,
            },
            Expr::Project(x, l) => match &**x {
                Expr::Record(fields) => fields.iter().find(|(m, _)| m == l).map(|(_, v)| v.clone()),
                Expr::If { cond, then, otherwise } => Some(Expr::If {
                    cond: cond.clone(),
                    then: Box::new(then.as_ref().clone().field(l)),
                    otherwise: Box::new(otherwise.as_ref().clone().field(l)),
                }),
                _ => None,
            },
            Expr::For { binder, source, body } => self.step_for(binder, source, body),
            Expr::Where { cond, body } => {
                if let Some(b) = bool_lit(cond) {
                    return Some(if b { body.as_ref().clone() } else { Expr::Empty(None) });
                }
                match &**body {
                    Expr::Empty(_) => Some(Expr::Empty(None)),
                    Expr::Concat(a, c) => Some(Expr::Concat(
                        Box::new(Expr::Where { cond: cond.clone(), body: a.clone() }),
                        Box::new(Expr::Where { cond: cond.clone(), body: c.clone() }),
                    )),
                    Expr::Where { cond: inner, body } => Some(Expr::Where {
                        cond: Box::new(Expr::Prim(PrimOp::And, vec![cond.as_ref().clone(), inner.as_ref().clone()])),
                        body: body.clone(),
                    }),
                    _ => None,
                }
            }
            Expr::Concat(a, b) => match (&**a, &**b) {
                (Expr::Empty(_), _) => Some(b.as_ref().clone()),
                (_, Expr::Empty(_)) => Some(a.as_ref().clone()),
                _ => None,
            },
            Expr::If { cond, then, otherwise } => {
                if let Some(b) = bool_lit(cond) {
                    return Some(if b { then.as_ref().clone() } else { otherwise.as_ref().clone() });
                }
                if is_collection_shaped(then) || is_collection_shaped(otherwise) {
                    return Some(Expr::Concat(
                        Box::new(Expr::Where { cond: cond.clone(), body: then.clone() }),
                        Box::new(Expr::Where {
                            cond: Box::new(Expr::Prim(PrimOp::Not, vec![cond.as_ref().clone()])),
                            body: otherwise.clone(),
                        }),
                    ));
                }
                if let (Expr::Record(fa), Expr::Record(fb)) = (&**then, &**otherwise) {
                    let same_labels = fa.len() == fb.len() && fa.iter().all(|(l, _)| fb.iter().any(|(m, _)| m == l));
                    if same_labels {
                        return Some(Expr::Record(
                            fa.iter()
                                .map(|(l, x)| {
                                    let y = &fb.iter().find(|(m, _)| m == l).expect("same labels").1;
                                    (
                                        l.clone(),
                                        Expr::If {
                                            cond: cond.clone(),
                                            then: Box::new(x.clone()),
                                            otherwise: Box::new(y.clone()),
                                        },
                                    )
                                })
                                .collect(),
                        ));
                    }
                }
                None
            }
            Expr::IsEmpty(x) => match &**x {
                Expr::Empty(_) => Some(Expr::Const(Scalar::Bool(true))),
                _ => None,
            },
            Expr::Prim(op, args) => simplify_prim(*op, args),
            _ => None,
        }
    }

    fn step_for(&self, binder: &str, source: &Expr, body: &Expr) -> Option<Expr> {
        let for_ = |b: &str, s: Expr, body: Expr| Expr::For {
            binder: b.to_string(),
            source: Box::new(s),
            body: Box::new(body),
        };
        match source {
            Expr::Singleton(m) => Some(body.substitute(binder, m)),
            Expr::Empty(_) => Some(Expr::Empty(None)),
            Expr::Concat(a, b) => Some(Expr::Concat(
                Box::new(for_(binder, a.as_ref().clone(), body.clone())),
                Box::new(for_(binder, b.as_ref().clone(), body.clone())),
            )),
            Expr::For { binder: inner, source: inner_src, body: inner_body } => {
                // for (x <- for (y <- L) M) N  ==>  for (y' <- L) for (x <- M[y'/y]) N
                let mut avoid: BTreeSet<String> = body.free_vars();
                avoid.insert(binder.to_string());
                avoid.extend(inner_body.all_names());
                let (y, m) = if body.free_vars().contains(inner) || inner == binder {
                    let y = fresh_name(inner, &avoid);
                    let m = inner_body.substitute(inner, &Expr::Var(y.clone()));
                    (y, m)
                } else {
                    (inner.clone(), inner_body.as_ref().clone())
                };
                Some(for_(&y, inner_src.as_ref().clone(), for_(binder, m, body.clone())))
            }
            Expr::Where { cond, body: inner } => Some(Expr::Where {
                cond: cond.clone(),
                body: Box::new(for_(binder, inner.as_ref().clone(), body.clone())),
            }),
            Expr::Table(_) => match body {
                Expr::Empty(_) => Some(Expr::Empty(None)),
                Expr::Concat(a, b) => Some(Expr::Concat(
                    Box::new(for_(binder, source.clone(), a.as_ref().clone())),
                    Box::new(for_(binder, source.clone(), b.as_ref().clone())),
                )),
                _ => None,
            },
            _ => None,
        }
    }
}

fn simplify_prim(op: PrimOp, args: &[Expr]) -> Option<Expr> {
    let t = |b: bool| Expr::Const(Scalar::Bool(b));
    match op {
        PrimOp::Not => match &args[0] {
            Expr::Prim(PrimOp::Not, inner) => Some(inner[0].clone()),
            Expr::Const(Scalar::Bool(b)) => Some(t(!b)),
            _ => None,
        },
        PrimOp::And => match (bool_lit(&args[0]), bool_lit(&args[1])) {
            (Some(true), _) => Some(args[1].clone()),
            (_, Some(true)) => Some(args[0].clone()),
            (Some(false), _) => Some(t(false)),
            _ => None,
        },
        PrimOp::Or => match (bool_lit(&args[0]), bool_lit(&args[1])) {
            (Some(false), _) => Some(args[1].clone()),
            (_, Some(false)) => Some(args[0].clone()),
            (Some(true), _) => Some(t(true)),
            _ => None,
        },
        _ => None,
    }
}
