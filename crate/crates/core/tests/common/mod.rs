//! Random well-typed queries and small databases for differential tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

use lq::ir::build::*;
use lq::ir::{Catalog, Expr, PrimOp, QueryType, Scalar, ScalarType, TableSchema};
use lq::Database;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest comprehension nesting in generated queries.
pub const MAX_DEPTH: usize = 5;
pub const MAX_ROWS: usize = 8;

/// Name, columns, key.
type TableDef = (&'static str, &'static [(&'static str, ScalarType)], &'static [&'static str]);

const TABLES: &[TableDef] = &[
    (
        "r",
        &[
            ("id", ScalarType::Int),
            ("k", ScalarType::Int),
            ("b", ScalarType::Bool),
            ("s", ScalarType::String),
            ("w", ScalarType::Float),
        ],
        &["id"],
    ),
    (
        "q",
        &[("id", ScalarType::Int), ("rid", ScalarType::Int), ("v", ScalarType::Int), ("t", ScalarType::String)],
        &["id"],
    ),
    ("p", &[("rid", ScalarType::Int), ("tag", ScalarType::String)], &["rid", "tag"]),
];

const STRINGS: &[&str] = &["a", "b", "o'k", ""];
const FLOATS: &[f64] = &[0.5, 1.0, -2.25];

pub fn catalog() -> Catalog {
    Catalog::from_tables(TABLES.iter().map(|(n, cols, key)| TableSchema::new(*n, cols, key)))
        .expect("valid test schema")
}

fn columns(table: &str) -> &'static [(&'static str, ScalarType)] {
    TABLES.iter().find(|(n, ..)| *n == table).expect("known table").1
}

/// A database with up to [`MAX_ROWS`] rows per table and unique keys.
pub fn database(seed: u64) -> Database {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdb);
    let mut rows = BTreeMap::new();
    for (name, cols, key) in TABLES {
        let n = rng.gen_range(0..=MAX_ROWS);
        let mut table: Vec<Vec<Scalar>> = Vec::new();
        for i in 0..n {
            let row: Vec<Scalar> = cols
                .iter()
                .map(|(c, ty)| match (*c, ty) {
                    ("id", _) => Scalar::Int(i as i64 + 1),
                    (_, ScalarType::Int) => Scalar::Int(rng.gen_range(-2..=5)),
                    (_, ScalarType::Bool) => Scalar::Bool(rng.gen()),
                    (_, ScalarType::String) => Scalar::Str(STRINGS.choose(&mut rng).unwrap().to_string()),
                    (_, ScalarType::Float) => Scalar::Float(*FLOATS.choose(&mut rng).unwrap()),
                })
                .collect();
            let key_of = |r: &Vec<Scalar>| {
                key.iter().map(|k| r[cols.iter().position(|(c, _)| c == k).unwrap()].clone()).collect::<Vec<_>>()
            };
            if !table.iter().any(|r| key_of(r) == key_of(&row)) {
                table.push(row);
            }
        }
        rows.insert(name.to_string(), table);
    }
    Database::from_rows(catalog(), rows).expect("rows fit the schema")
}

#[derive(Clone)]
enum Binding {
    Row(&'static str),
    Scalar(ScalarType),
}

#[derive(Clone, Default)]
struct Env(Vec<(String, Binding)>);

impl Env {
    fn with(&self, name: &str, b: Binding) -> Env {
        let mut e = self.clone();
        e.0.push((name.to_string(), b));
        e
    }

    /// Expressions of scalar type `ty` readable from bound variables.
    fn reads(&self, ty: ScalarType) -> Vec<Expr> {
        let mut out = Vec::new();
        for (name, b) in &self.0 {
            match b {
                Binding::Row(t) => {
                    out.extend(columns(t).iter().filter(|(_, c)| *c == ty).map(|(c, _)| var(name).field(c)))
                }
                Binding::Scalar(t) if *t == ty => out.push(var(name)),
                Binding::Scalar(_) => {}
            }
        }
        out
    }
}

pub struct QueryGen {
    rng: ChaCha8Rng,
    fresh: usize,
}

impl QueryGen {
    pub fn new(seed: u64) -> QueryGen {
        QueryGen { rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 }
    }

    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn scalar_ty(&mut self) -> ScalarType {
        *[ScalarType::Int, ScalarType::Bool, ScalarType::String, ScalarType::Int].choose(&mut self.rng).unwrap()
    }

    /// Element type of a collection nested at most `depth` more levels.
    fn elem_ty(&mut self, depth: usize) -> QueryType {
        if depth <= 1 || self.coin(0.35) {
            return QueryType::Scalar(self.scalar_ty());
        }
        let n = self.rng.gen_range(1..=3);
        QueryType::Record(
            (0..n)
                .map(|i| {
                    let t = if self.coin(0.4) {
                        QueryType::Collection(Box::new(self.elem_ty(depth - 1)))
                    } else {
                        QueryType::Scalar(self.scalar_ty())
                    };
                    (format!("f{i}"), t)
                })
                .collect(),
        )
    }

    fn lit(&mut self, ty: ScalarType) -> Expr {
        match ty {
            ScalarType::Int => lit(self.rng.gen_range(-2i64..=5)),
            ScalarType::Bool => lit(self.rng.gen::<bool>()),
            ScalarType::String => lit(Scalar::Str(STRINGS.choose(&mut self.rng).unwrap().to_string())),
            ScalarType::Float => lit(*FLOATS.choose(&mut self.rng).unwrap()),
        }
    }

    fn term(&mut self, env: &Env, ty: ScalarType, d: usize) -> Expr {
        let reads = env.reads(ty);
        let roll = self.rng.gen_range(0..10);
        match roll {
            0..=4 if !reads.is_empty() => reads.choose(&mut self.rng).unwrap().clone(),
            6 if d > 0 && ty == ScalarType::Int => {
                let op = *[PrimOp::Add, PrimOp::Sub, PrimOp::Mul].choose(&mut self.rng).unwrap();
                prim(op, vec![self.term(env, ty, d - 1), self.lit(ScalarType::Int)])
            }
            5 if d > 0 && ty == ScalarType::Int => {
                // Division by a non-zero constant never fails.
                let divisor = *[1i64, 2, -3].choose(&mut self.rng).unwrap();
                prim(PrimOp::Div, vec![self.term(env, ty, d - 1), lit(divisor)])
            }
            5 | 6 if d > 0 && ty == ScalarType::Bool => self.cond(env, d - 1, 0),
            7 if d > 0 => if_(self.cond(env, d - 1, 0), self.term(env, ty, d - 1), self.term(env, ty, d - 1)),
            8 if d > 0 => {
                let other = self.scalar_ty();
                Expr::Record(vec![("a".into(), self.term(env, ty, d - 1)), ("z".into(), self.term(env, other, 0))])
                    .field("a")
            }
            _ => self.lit(ty),
        }
    }

    /// A boolean condition; `qd` bounds the nesting of emptiness tests.
    fn cond(&mut self, env: &Env, d: usize, qd: usize) -> Expr {
        match self.rng.gen_range(0..10) {
            0 | 1 => {
                let op = *[PrimOp::Eq, PrimOp::Ne, PrimOp::Lt, PrimOp::Le, PrimOp::Gt, PrimOp::Ge]
                    .choose(&mut self.rng)
                    .unwrap();
                let ty = *[ScalarType::Int, ScalarType::Int, ScalarType::String, ScalarType::Float]
                    .choose(&mut self.rng)
                    .unwrap();
                prim(op, vec![self.term(env, ty, d), self.term(env, ty, d)])
            }
            2 => eq(self.term(env, ScalarType::Int, d), self.term(env, ScalarType::Int, d)),
            3 if d > 0 => and(self.cond(env, d - 1, qd), self.cond(env, d - 1, qd)),
            4 if d > 0 => or(self.cond(env, d - 1, qd), self.cond(env, d - 1, qd)),
            5 if d > 0 => not(self.cond(env, d - 1, qd)),
            6 | 7 if qd > 0 => {
                let rows = self.rows(env, qd - 1).0;
                if self.coin(0.5) {
                    is_empty(rows)
                } else {
                    not(is_empty(rows))
                }
            }
            8 => {
                let reads = env.reads(ScalarType::Bool);
                reads.choose(&mut self.rng).cloned().unwrap_or_else(|| self.lit(ScalarType::Bool))
            }
            _ => self.term(env, ScalarType::Bool, d),
        }
    }

    /// A collection of table rows: a table, or a filtered comprehension over one.
    fn rows(&mut self, env: &Env, qd: usize) -> (Expr, &'static str) {
        let t = TABLES.choose(&mut self.rng).unwrap().0;
        if qd == 0 || self.coin(0.5) {
            return (table(t), t);
        }
        let y = self.name("y");
        let inner = env.with(&y, Binding::Row(t));
        let c = self.cond(&inner, 1, qd - 1);
        (for_in(&y, table(t), where_(c, yield_(var(&y)))), t)
    }

    /// A value of type `ty`; collections nest at most `qd` more levels.
    fn value(&mut self, env: &Env, ty: &QueryType, qd: usize) -> Expr {
        match ty {
            QueryType::Scalar(t) => self.term(env, *t, 2),
            QueryType::Record(fields) => {
                Expr::Record(fields.iter().map(|(l, t)| (l.clone(), self.value(env, t, qd))).collect())
            }
            QueryType::Collection(_) => self.query(env, ty, qd.max(1)),
        }
    }

    /// A query of collection type `ty` using at most `qd` nested comprehension levels.
    fn query(&mut self, env: &Env, ty: &QueryType, qd: usize) -> Expr {
        let elem = ty.element().expect("collection type").clone();
        match self.rng.gen_range(0..12) {
            0 if qd > 1 => concat(self.query(env, ty, qd - 1), self.query(env, ty, qd - 1)),
            1 => empty(ty.clone()),
            2 if qd > 1 => if_(self.cond(env, 1, 0), self.query(env, ty, qd - 1), self.query(env, ty, qd - 1)),
            3 if qd > 1 => {
                let p = self.name("arg");
                let pty = self.scalar_ty();
                let body = self.query(&env.with(&p, Binding::Scalar(pty)), ty, qd - 1);
                apply(lambda(&[p.as_str()], body), vec![self.term(env, pty, 1)])
            }
            4 => yield_(self.value(env, &elem, qd.saturating_sub(1))),
            _ => {
                let x = self.name("x");
                let (src, t) = self.rows(env, qd.saturating_sub(1));
                let mut inner = env.with(&x, Binding::Row(t));
                let second = if self.coin(0.3) {
                    let z = self.name("z");
                    let (src2, t2) = self.rows(&inner, 0);
                    inner = inner.with(&z, Binding::Row(t2));
                    Some((z, src2))
                } else {
                    None
                };
                let mut body = yield_(self.value(&inner, &elem, qd - 1));
                if self.coin(0.7) {
                    body = where_(self.cond(&inner, 2, qd - 1), body);
                }
                if let Some((z, src2)) = second {
                    body = for_in(&z, src2, body);
                }
                for_in(&x, src, body)
            }
        }
    }

    /// A closed query with comprehension nesting at most [`MAX_DEPTH`].
    pub fn closed_query(&mut self) -> Expr {
        loop {
            let depth = self.rng.gen_range(1..=MAX_DEPTH);
            let elem = self.elem_ty(depth);
            let e = self.query(&Env::default(), &QueryType::Collection(Box::new(elem)), depth);
            if comprehension_depth(&e) <= MAX_DEPTH {
                return e;
            }
        }
    }
}

/// Largest nesting of comprehensions in `e`.
pub fn comprehension_depth(e: &Expr) -> usize {
    let own = usize::from(matches!(e, Expr::For { .. }));
    own + e.children().into_iter().map(comprehension_depth).max().unwrap_or(0)
}
