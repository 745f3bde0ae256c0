use std::collections::BTreeSet;

use super::expr::{Expr, PrimOp};
use super::types::{Catalog, QueryType, ScalarType};
use super::TypeError;

/// Typing context: the table catalog plus variables bound by enclosing binders.
#[derive(Debug, Clone)]
pub struct Env<'a> {
    pub catalog: &'a Catalog,
    bindings: Vec<(String, QueryType)>,
}

impl<'a> Env<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        Env { catalog, bindings: Vec::new() }
    }

    pub fn bind(mut self, name: &str, ty: QueryType) -> Self {
        self.bindings.push((name.to_string(), ty));
        self
    }

    fn lookup(&self, name: &str) -> Option<&QueryType> {
        self.bindings.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

/// Typechecks a closed query against the catalog.
pub fn typecheck(e: &Expr, catalog: &Catalog) -> Result<QueryType, TypeError> {
    typecheck_in(e, &Env::new(catalog))
}

pub fn typecheck_in(e: &Expr, env: &Env<'_>) -> Result<QueryType, TypeError> {
    let mut checker = Checker { env: env.clone(), path: Vec::new() };
    checker.check(e)
}

struct Checker<'a> {
    env: Env<'a>,
    path: Vec<String>,
}

fn scalar(t: ScalarType) -> QueryType {
    QueryType::Scalar(t)
}

impl Checker<'_> {
    fn path(&self) -> String {
        if self.path.is_empty() {
            "<root>".to_string()
        } else {
            self.path.join("/")
        }
    }

    fn mismatch(&self, expected: impl Into<String>, found: impl ToString) -> TypeError {
        TypeError::TypeMismatch { expected: expected.into(), found: found.to_string(), path: self.path() }
    }

    fn at<T>(&mut self, seg: impl Into<String>, f: impl FnOnce(&mut Self) -> T) -> T {
        self.path.push(seg.into());
        let out = f(self);
        self.path.pop();
        out
    }

    fn check_at(&mut self, seg: impl Into<String>, e: &Expr) -> Result<QueryType, TypeError> {
        self.at(seg, |c| c.check(e))
    }

    fn with_bindings<T>(&mut self, binds: Vec<(String, QueryType)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let n = binds.len();
        self.env.bindings.extend(binds);
        let out = f(self);
        let len = self.env.bindings.len();
        self.env.bindings.truncate(len - n);
        out
    }

    fn expect_collection(&self, t: QueryType) -> Result<QueryType, TypeError> {
        match t {
            QueryType::Collection(_) => Ok(t),
            other => Err(self.mismatch("Collection", other)),
        }
    }

    fn expect_bool(&self, t: &QueryType) -> Result<(), TypeError> {
        if *t == scalar(ScalarType::Bool) {
            Ok(())
        } else {
            Err(self.mismatch("Bool", t))
        }
    }

    fn check(&mut self, e: &Expr) -> Result<QueryType, TypeError> {
        match e {
            Expr::Var(n) => self
                .env
                .lookup(n)
                .cloned()
                .ok_or_else(|| TypeError::UnboundVariable { name: n.clone(), path: self.path() }),
            Expr::Const(c) => Ok(scalar(c.ty())),
            Expr::Table(n) => self
                .env
                .catalog
                .get(n)
                .map(|t| QueryType::collection(t.row_type()))
                .ok_or_else(|| TypeError::UnknownTable { name: n.clone(), path: self.path() }),
            Expr::For { binder, source, body } => {
                let seg = format!("for {binder}");
                let src = self.check_at(format!("{seg}.source"), source)?;
                let element = match src {
                    QueryType::Collection(el) => *el,
                    other => return Err(self.at(format!("{seg}.source"), |c| c.mismatch("Collection", other))),
                };
                let body_ty =
                    self.with_bindings(vec![(binder.clone(), element)], |c| c.check_at(format!("{seg}.body"), body))?;
                self.at(format!("{seg}.body"), |c| c.expect_collection(body_ty))
            }
            Expr::Where { cond, body } => {
                let ct = self.check_at("where.cond", cond)?;
                self.at("where.cond", |c| c.expect_bool(&ct))?;
                let bt = self.check_at("where.body", body)?;
                self.at("where.body", |c| c.expect_collection(bt))
            }
            Expr::Singleton(x) => Ok(QueryType::collection(self.check_at("[]", x)?)),
            Expr::Empty(Some(t)) => self.expect_collection(t.clone()),
            Expr::Empty(None) => Err(self.mismatch("annotated empty collection", "[]")),
            Expr::Concat(a, b) => {
                let ta = self.check_at("++.left", a)?;
                let ta = self.at("++.left", |c| c.expect_collection(ta))?;
                let tb = self.check_at("++.right", b)?;
                if ta != tb {
                    return Err(self.at("++.right", |c| c.mismatch(ta.to_string(), &tb)));
                }
                Ok(ta)
            }
            Expr::Record(fields) => {
                let mut seen = BTreeSet::new();
                let mut out = Vec::with_capacity(fields.len());
                for (l, x) in fields {
                    if !seen.insert(l.as_str()) {
                        return Err(self.mismatch("distinct record labels", format!("duplicate `{l}`")));
                    }
                    out.push((l.clone(), self.check_at(format!("record.{l}"), x)?));
                }
                Ok(QueryType::Record(out))
            }
            Expr::Project(x, l) => {
                let t = self.check_at(format!(".{l}"), x)?;
                match &t {
                    QueryType::Record(_) => t
                        .field(l)
                        .cloned()
                        .ok_or_else(|| TypeError::UnknownField { field: l.clone(), path: self.path() }),
                    other => Err(self.mismatch(format!("Record with field `{l}`"), other)),
                }
            }
            Expr::IsEmpty(x) => {
                let t = self.check_at("empty", x)?;
                self.at("empty", |c| c.expect_collection(t))?;
                Ok(scalar(ScalarType::Bool))
            }
            Expr::If { cond, then, otherwise } => {
                let ct = self.check_at("if.cond", cond)?;
                self.at("if.cond", |c| c.expect_bool(&ct))?;
                let tt = self.check_at("if.then", then)?;
                let te = self.check_at("if.else", otherwise)?;
                if tt != te {
                    return Err(self.at("if.else", |c| c.mismatch(tt.to_string(), &te)));
                }
                Ok(tt)
            }
            Expr::Prim(op, args) => self.check_prim(*op, args),
            Expr::Lambda { .. } => Err(self.mismatch("data value", "function outside of an application")),
            Expr::Apply { func, args } => {
                let (params, body) = match &**func {
                    Expr::Lambda { params, body } => (params, body),
                    other => {
                        return Err(self.at("fn", |c| c.mismatch("function literal", other)));
                    }
                };
                if params.len() != args.len() {
                    return Err(
                        self.mismatch(format!("{} arguments", params.len()), format!("{} arguments", args.len()))
                    );
                }
                let mut binds = Vec::with_capacity(args.len());
                for (i, (p, a)) in params.iter().zip(args).enumerate() {
                    binds.push((p.clone(), self.check_at(format!("arg{i}"), a)?));
                }
                self.with_bindings(binds, |c| c.check_at("fn.body", body))
            }
        }
    }

    fn check_prim(&mut self, op: PrimOp, args: &[Expr]) -> Result<QueryType, TypeError> {
        if args.len() != op.arity() {
            return Err(self.mismatch(
                format!("{} operand(s) for `{}`", op.arity(), op.symbol()),
                format!("{} operand(s)", args.len()),
            ));
        }
        let mut tys = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let t = self.check_at(format!("{}.{i}", op.symbol()), a)?;
            match t {
                QueryType::Scalar(s) => tys.push(s),
                other => return Err(self.at(format!("{}.{i}", op.symbol()), |c| c.mismatch("scalar operand", other))),
            }
        }
        let operand = |c: &Self, allowed: &[ScalarType]| -> Result<ScalarType, TypeError> {
            let first = tys[0];
            if !allowed.contains(&first) {
                return Err(c.mismatch(format!("operand of `{}` in {:?}", op.symbol(), allowed), first));
            }
            if let Some(&second) = tys.get(1) {
                if second != first {
                    return Err(c.mismatch(first.to_string(), second));
                }
            }
            Ok(first)
        };
        use ScalarType::*;
        match op {
            PrimOp::Eq | PrimOp::Ne => {
                operand(self, &[Int, Float, Bool, String])?;
                Ok(scalar(Bool))
            }
            PrimOp::Lt | PrimOp::Le | PrimOp::Gt | PrimOp::Ge => {
                operand(self, &[Int, Float, String])?;
                Ok(scalar(Bool))
            }
            PrimOp::And | PrimOp::Or | PrimOp::Not => {
                operand(self, &[Bool])?;
                Ok(scalar(Bool))
            }
            PrimOp::Add | PrimOp::Sub | PrimOp::Mul | PrimOp::Div => Ok(scalar(operand(self, &[Int, Float])?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::build::*;
    use crate::ir::TableSchema;

    fn catalog() -> Catalog {
        Catalog::from_tables([
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
        .unwrap()
    }

    fn s(t: ScalarType) -> QueryType {
        QueryType::Scalar(t)
    }

    #[test]
    fn approved_names() {
        let q = for_in(
            "l",
            table("ligand"),
            where_(var("l").field("approved"), yield_(record([("name", var("l").field("name"))]))),
        );
        let t = typecheck(&q, &catalog()).unwrap();
        assert_eq!(t, QueryType::collection(QueryType::record([("name", s(ScalarType::String))])));
    }

    #[test]
    fn annotated_empty() {
        let t = QueryType::collection(s(ScalarType::Int));
        assert_eq!(typecheck(&empty(t.clone()), &catalog()).unwrap(), t);
        assert!(typecheck(&Expr::Empty(None), &catalog()).is_err());
    }

    #[test]
    fn misspelled_field_is_reported_with_path() {
        let q = for_in("l", table("ligand"), yield_(record([("n", var("l").field("namee"))])));
        match typecheck(&q, &catalog()) {
            Err(TypeError::UnknownField { field, path }) => {
                assert_eq!(field, "namee");
                assert_eq!(path, "for l.body/[]/record.n");
            }
            other => panic!("unexpected {other:?}"),
        }
        // every declared column is accepted
        for col in ["ligand_id", "name", "approved"] {
            let q = for_in("l", table("ligand"), yield_(record([("n", var("l").field(col))])));
            assert!(typecheck(&q, &catalog()).is_ok(), "{col}");
        }
    }

    #[test]
    fn error_kinds() {
        let c = catalog();
        assert!(matches!(typecheck(&var("x"), &c), Err(TypeError::UnboundVariable { .. })));
        assert!(matches!(typecheck(&table("nope"), &c), Err(TypeError::UnknownTable { .. })));
        let bad_where = for_in("l", table("ligand"), where_(var("l").field("name"), yield_(var("l"))));
        assert!(matches!(typecheck(&bad_where, &c), Err(TypeError::TypeMismatch { .. })));
        let bad_empty = is_empty(lit(1));
        assert!(matches!(typecheck(&bad_empty, &c), Err(TypeError::TypeMismatch { .. })));
        let mixed = eq(lit(1), lit("a"));
        assert!(matches!(typecheck(&mixed, &c), Err(TypeError::TypeMismatch { .. })));
        let bare_fn = lambda(&["x"], var("x"));
        assert!(matches!(typecheck(&bare_fn, &c), Err(TypeError::TypeMismatch { .. })));
    }

    #[test]
    fn application_binds_parameters() {
        let get = lambda(
            &["id"],
            for_in(
                "s",
                table("ligand2synonym"),
                where_(eq(var("s").field("ligand_id"), var("id")), yield_(var("s").field("synonym"))),
            ),
        );
        let q = for_in(
            "l",
            table("ligand"),
            yield_(record([
                ("name", var("l").field("name")),
                ("synonyms", apply(get, vec![var("l").field("ligand_id")])),
            ])),
        );
        let t = typecheck(&q, &catalog()).unwrap();
        assert_eq!(t.collection_count(), 2);
    }

    #[test]
    fn division_by_literal_zero_typechecks() {
        assert_eq!(typecheck(&prim(PrimOp::Div, vec![lit(1), lit(0)]), &catalog()).unwrap(), s(ScalarType::Int));
    }
}
