//! The direct nested evaluator: comprehension semantics run entirely in memory.

use std::cmp::Ordering;

use crate::ir::{Expr, PrimOp, Scalar};
use crate::value::Value;

use super::{Database, RuntimeQueryError};

/// Evaluates a typechecked query over `db`. Generators run in table row order.
pub fn eval_direct(e: &Expr, db: &Database) -> Result<Value, RuntimeQueryError> {
    Evaluator { db, env: Vec::new(), queries: None }.eval(e)
}

/// Evaluates `e` the way a naive per-row implementation would talk to a
/// database, returning the value and the number of queries it would issue:
/// one for the whole expression, one per nested collection built inside a
/// record, and one per emptiness test.
pub fn eval_naive(e: &Expr, db: &Database) -> Result<(Value, usize), RuntimeQueryError> {
    let mut ev = Evaluator { db, env: Vec::new(), queries: Some(1) };
    let v = ev.eval(e)?;
    Ok((v, ev.queries.unwrap_or(0)))
}

struct Evaluator<'d> {
    db: &'d Database,
    env: Vec<(String, Value)>,
    queries: Option<usize>,
}

fn ill_typed(what: impl Into<String>) -> RuntimeQueryError {
    RuntimeQueryError::IllTyped(what.into())
}

impl Evaluator<'_> {
    fn count(&mut self) {
        if let Some(n) = &mut self.queries {
            *n += 1;
        }
    }

    fn list(&mut self, e: &Expr) -> Result<Vec<Value>, RuntimeQueryError> {
        match self.eval(e)? {
            Value::List(items) => Ok(items),
            v => Err(ill_typed(format!("expected a collection, found {v}"))),
        }
    }

    fn boolean(&mut self, e: &Expr) -> Result<bool, RuntimeQueryError> {
        self.eval(e)?.as_bool().ok_or_else(|| ill_typed("expected a boolean"))
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, RuntimeQueryError> {
        match e {
            Expr::Var(x) => self
                .env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| ill_typed(format!("unbound variable `{x}`"))),
            Expr::Const(c) => Ok(Value::from(c)),
            Expr::Table(t) => {
                let table = self.db.table(t).ok_or_else(|| ill_typed(format!("unknown table `{t}`")))?;
                Ok(Value::List(
                    table
                        .rows
                        .iter()
                        .map(|r| {
                            Value::Record(
                                table
                                    .schema
                                    .columns
                                    .iter()
                                    .zip(r)
                                    .map(|(c, v)| (c.name.clone(), Value::from(v)))
                                    .collect(),
                            )
                        })
                        .collect(),
                ))
            }
            Expr::For { binder, source, body } => {
                let mut out = Vec::new();
                for item in self.list(source)? {
                    self.env.push((binder.clone(), item));
                    let r = self.list(body);
                    self.env.pop();
                    out.extend(r?);
                }
                Ok(Value::List(out))
            }
            Expr::Where { cond, body } => {
                if self.boolean(cond)? {
                    self.eval(body)
                } else {
                    Ok(Value::List(Vec::new()))
                }
            }
            Expr::Singleton(x) => Ok(Value::List(vec![self.eval(x)?])),
            Expr::Empty(_) => Ok(Value::List(Vec::new())),
            Expr::Concat(a, b) => {
                let mut a = self.list(a)?;
                a.extend(self.list(b)?);
                Ok(Value::List(a))
            }
            Expr::Record(fields) => {
                let mut out = Vec::with_capacity(fields.len());
                for (l, x) in fields {
                    let v = self.eval(x)?;
                    if matches!(v, Value::List(_)) {
                        self.count();
                    }
                    out.push((l.clone(), v));
                }
                Ok(Value::Record(out))
            }
            Expr::Project(x, l) => {
                let v = self.eval(x)?;
                v.field(l).cloned().ok_or_else(|| ill_typed(format!("no field `{l}`")))
            }
            Expr::IsEmpty(x) => {
                self.count();
                Ok(Value::Bool(self.list(x)?.is_empty()))
            }
            Expr::If { cond, then, otherwise } => {
                if self.boolean(cond)? {
                    self.eval(then)
                } else {
                    self.eval(otherwise)
                }
            }
            Expr::Prim(PrimOp::And, args) => Ok(Value::Bool(self.boolean(&args[0])? && self.boolean(&args[1])?)),
            Expr::Prim(PrimOp::Or, args) => Ok(Value::Bool(self.boolean(&args[0])? || self.boolean(&args[1])?)),
            Expr::Prim(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a)?.as_scalar().ok_or_else(|| ill_typed("primitive on non-scalar"))?);
                }
                apply_prim(*op, &vals).map(Value::from)
            }
            Expr::Apply { func, args } => match func.as_ref() {
                Expr::Lambda { params, body } if params.len() == args.len() => {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(self.eval(a)?);
                    }
                    let depth = self.env.len();
                    self.env.extend(params.iter().cloned().zip(vals));
                    let r = self.eval(body);
                    self.env.truncate(depth);
                    r
                }
                _ => Err(ill_typed("application of a non-lambda")),
            },
            Expr::Lambda { .. } => Err(ill_typed("lambda outside function position")),
        }
    }
}

/// Scalar comparison as SQL performs it: numeric for numbers, bytewise for strings.
pub(crate) fn compare(a: &Scalar, b: &Scalar) -> Result<Ordering, RuntimeQueryError> {
    match (a, b) {
        (Scalar::Int(x), Scalar::Int(y)) => Ok(x.cmp(y)),
        (Scalar::Float(x), Scalar::Float(y)) => x.partial_cmp(y).ok_or_else(|| ill_typed("NaN comparison")),
        (Scalar::Bool(x), Scalar::Bool(y)) => Ok(x.cmp(y)),
        (Scalar::Str(x), Scalar::Str(y)) => Ok(x.as_bytes().cmp(y.as_bytes())),
        _ => Err(ill_typed(format!("comparison of {} with {}", a.ty(), b.ty()))),
    }
}

/// Applies a non-short-circuiting primitive to evaluated operands.
pub(crate) fn apply_prim(op: PrimOp, v: &[Scalar]) -> Result<Scalar, RuntimeQueryError> {
    use PrimOp::*;
    let overflow = || RuntimeQueryError::Overflow(op.symbol());
    Ok(match op {
        Eq => Scalar::Bool(compare(&v[0], &v[1])? == Ordering::Equal),
        Ne => Scalar::Bool(compare(&v[0], &v[1])? != Ordering::Equal),
        Lt => Scalar::Bool(compare(&v[0], &v[1])? == Ordering::Less),
        Le => Scalar::Bool(compare(&v[0], &v[1])? != Ordering::Greater),
        Gt => Scalar::Bool(compare(&v[0], &v[1])? == Ordering::Greater),
        Ge => Scalar::Bool(compare(&v[0], &v[1])? != Ordering::Less),
        And | Or => {
            let (a, b) = (v[0].as_bool(), v[1].as_bool());
            match (a, b) {
                (Some(a), Some(b)) => Scalar::Bool(if op == And { a && b } else { a || b }),
                _ => return Err(ill_typed("logical operator on non-booleans")),
            }
        }
        Not => Scalar::Bool(!v[0].as_bool().ok_or_else(|| ill_typed("not on non-boolean"))?),
        Add | Sub | Mul | Div => match (&v[0], &v[1]) {
            (Scalar::Int(a), Scalar::Int(b)) => Scalar::Int(match op {
                Add => a.checked_add(*b).ok_or_else(overflow)?,
                Sub => a.checked_sub(*b).ok_or_else(overflow)?,
                Mul => a.checked_mul(*b).ok_or_else(overflow)?,
                _ if *b == 0 => return Err(RuntimeQueryError::DivisionByZero),
                _ => a.checked_div(*b).ok_or_else(overflow)?,
            }),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                _ if *b == 0.0 => return Err(RuntimeQueryError::DivisionByZero),
                _ => a / b,
            }),
            _ => return Err(ill_typed("arithmetic on mismatched operands")),
        },
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ir::build::*;
    use crate::ir::{Catalog, ScalarType, TableSchema};

    fn fixture() -> Database {
        let catalog = Catalog::from_tables([
            TableSchema::new(
                "ligand",
                &[("ligand_id", ScalarType::Int), ("name", ScalarType::String), ("approved", ScalarType::Bool)],
                &["ligand_id"],
            ),
            TableSchema::new(
                "ligand2synonym",
                &[("ligand_id", ScalarType::Int), ("synonym", ScalarType::String)],
                &["ligand_id", "synonym"],
            ),
        ])
        .unwrap();
        let mut rows = BTreeMap::new();
        rows.insert(
            "ligand".to_string(),
            vec![
                vec![Scalar::Int(1), Scalar::from("aspirin"), Scalar::Bool(true)],
                vec![Scalar::Int(2), Scalar::from("cocaine"), Scalar::Bool(false)],
            ],
        );
        rows.insert(
            "ligand2synonym".to_string(),
            vec![vec![Scalar::Int(1), Scalar::from("ASA")], vec![Scalar::Int(1), Scalar::from("acetylsalicylic acid")]],
        );
        Database::from_rows(catalog, rows).unwrap()
    }

    fn names(l: &Value) -> Vec<String> {
        l.as_list().unwrap().iter().map(|v| v.field("name").unwrap().as_str().unwrap().to_string()).collect()
    }

    #[test]
    fn approved_names() {
        let q = for_in(
            "l",
            table("ligand"),
            where_(var("l").field("approved"), yield_(record([("name", var("l").field("name"))]))),
        );
        assert_eq!(names(&eval_direct(&q, &fixture()).unwrap()), ["aspirin"]);
    }

    #[test]
    fn empty_database_gives_empty_result() {
        let db = Database::empty(fixture().catalog().clone());
        let q = for_in("l", table("ligand"), yield_(var("l").field("name")));
        assert_eq!(eval_direct(&q, &db).unwrap(), Value::List(vec![]));
    }

    #[test]
    fn nested_synonyms_for_one_ligand() {
        let syn = for_in(
            "s",
            table("ligand2synonym"),
            where_(eq(var("s").field("ligand_id"), var("l").field("ligand_id")), yield_(var("s").field("synonym"))),
        );
        let q = for_in(
            "l",
            table("ligand"),
            where_(var("l").field("approved"), yield_(record([("name", var("l").field("name")), ("synonyms", syn)]))),
        );
        let v = eval_direct(&q, &fixture()).unwrap();
        let rows = v.as_list().unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(
            rows[0].field("synonyms").unwrap(),
            &Value::List(vec![Value::Str("ASA".into()), Value::Str("acetylsalicylic acid".into())])
        );
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let q = yield_(prim(PrimOp::Div, vec![lit(1), lit(0)]));
        assert_eq!(eval_direct(&q, &fixture()), Err(RuntimeQueryError::DivisionByZero));
        let q = yield_(prim(PrimOp::Div, vec![lit(1.0), lit(0.0)]));
        assert_eq!(eval_direct(&q, &fixture()), Err(RuntimeQueryError::DivisionByZero));
        let q = yield_(prim(PrimOp::Div, vec![lit(i64::MIN), lit(-1)]));
        assert!(matches!(eval_direct(&q, &fixture()), Err(RuntimeQueryError::Overflow(_))));
    }

    #[test]
    fn short_circuit_skips_errors() {
        let boom = eq(prim(PrimOp::Div, vec![lit(1), lit(0)]), lit(1));
        let q = where_(and(lit(false), boom.clone()), yield_(lit(1)));
        assert_eq!(eval_direct(&q, &fixture()).unwrap(), Value::List(vec![]));
        let q = where_(or(lit(true), boom), yield_(lit(1)));
        assert_eq!(eval_direct(&q, &fixture()).unwrap(), Value::List(vec![Value::Int(1)]));
    }

    #[test]
    fn apply_binds_parameters() {
        let f = lambda(&["x"], yield_(prim(PrimOp::Add, vec![var("x"), lit(1)])));
        let q = apply(f, vec![lit(41)]);
        assert_eq!(eval_direct(&q, &fixture()).unwrap(), Value::List(vec![Value::Int(42)]));
    }

    #[test]
    fn naive_counts_one_query_per_parent_row() {
        let syn = for_in(
            "s",
            table("ligand2synonym"),
            where_(eq(var("s").field("ligand_id"), var("l").field("ligand_id")), yield_(var("s").field("synonym"))),
        );
        let has = not(is_empty(syn.clone()));
        let q = for_in("l", table("ligand"), yield_(record([("synonyms", syn), ("has", has)])));
        let (_, n) = eval_naive(&q, &fixture()).unwrap();
        // root + 2 ligands × (synonyms list + emptiness test)
        assert_eq!(n, 5);
    }
}
