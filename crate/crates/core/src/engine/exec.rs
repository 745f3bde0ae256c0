//! In-memory execution of flat queries by nested loops.
//!
//! Each conjunct of a predicate is attached to the innermost generator it
//! mentions, so it is checked as soon as its inputs are bound. An equality
//! conjunct between a generator's column and earlier bindings turns that loop
//! into a hash probe. Probe lists keep table order, so output rows still come
//! out in lexicographic generator order.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::ir::{PrimOp, Scalar, ScalarType};
use crate::normalize::{Generator, Term};
use crate::shred::{FlatQuery, FlatRow};

use super::eval::apply_prim;
use super::{Database, RuntimeQueryError, Table};

/// Runs every branch of `q` and concatenates their rows in branch order.
pub fn exec_flat(q: &FlatQuery, db: &Database) -> Result<Vec<FlatRow>, RuntimeQueryError> {
    let indexes = Indexes::default();
    let mut out = Vec::new();
    for b in &q.branches {
        let mut scope = Vec::new();
        let lp = compile_loop(&b.generators, &b.predicate, &mut scope, db)?;
        scope.extend(bind(&b.generators, db)?);
        let outputs =
            b.select.iter().chain(&b.index).map(|t| compile_term(t, &mut scope, db)).collect::<Result<Vec<_>, _>>()?;
        let mut frames = Vec::with_capacity(b.generators.len());
        lp.run(0, &mut frames, &indexes, &mut |frames| {
            let row = outputs.iter().map(|t| t.eval(frames, &indexes)).collect::<Result<Vec<_>, _>>()?;
            out.push(row);
            Ok(true)
        })?;
    }
    Ok(out)
}

/// Scalar term with generator fields resolved to (frame, column) positions.
enum CTerm<'d> {
    Const(Scalar),
    Col(usize, usize),
    Prim(PrimOp, Vec<CTerm<'d>>),
    If(Box<[CTerm<'d>; 3]>),
    Exists(Box<Loop<'d>>),
}

struct Level<'d> {
    table: &'d Table,
    /// `(column, key)` when the loop probes a hash index instead of scanning.
    probe: Option<(usize, CTerm<'d>)>,
    filters: Vec<CTerm<'d>>,
}

struct Loop<'d> {
    /// Frame bound by the first level.
    base: usize,
    /// Conjuncts mentioning none of this loop's generators.
    pre: Vec<CTerm<'d>>,
    levels: Vec<Level<'d>>,
}

type Scope<'d> = Vec<(String, &'d Table)>;
type Index = HashMap<Scalar, Vec<usize>>;

#[derive(Default)]
struct Indexes {
    built: RefCell<HashMap<(*const Table, usize), Rc<Index>>>,
}

impl Indexes {
    fn get(&self, table: &Table, col: usize) -> Rc<Index> {
        let key = (table as *const Table, col);
        if let Some(ix) = self.built.borrow().get(&key) {
            return ix.clone();
        }
        let mut ix: Index = HashMap::new();
        for (i, r) in table.rows.iter().enumerate() {
            ix.entry(r[col].clone()).or_default().push(i);
        }
        let ix = Rc::new(ix);
        self.built.borrow_mut().insert(key, ix.clone());
        ix
    }
}

fn ill_typed(msg: String) -> RuntimeQueryError {
    RuntimeQueryError::IllTyped(msg)
}

fn bind<'d>(gens: &[Generator], db: &'d Database) -> Result<Scope<'d>, RuntimeQueryError> {
    gens.iter()
        .map(|g| {
            let t = db.table(&g.table).ok_or_else(|| ill_typed(format!("unknown table `{}`", g.table)))?;
            Ok((g.binder.clone(), t))
        })
        .collect()
}

fn compile_term<'d>(t: &Term, scope: &mut Scope<'d>, db: &'d Database) -> Result<CTerm<'d>, RuntimeQueryError> {
    Ok(match t {
        Term::Const(c) => CTerm::Const(c.clone()),
        Term::Field { var, column } => {
            let (frame, (_, table)) = scope
                .iter()
                .enumerate()
                .rev()
                .find(|(_, (b, _))| b == var)
                .ok_or_else(|| ill_typed(format!("unbound generator `{var}`")))?;
            let col = table
                .schema
                .column_index(column)
                .ok_or_else(|| ill_typed(format!("unknown column `{var}.{column}`")))?;
            CTerm::Col(frame, col)
        }
        Term::Prim(op, args) => {
            CTerm::Prim(*op, args.iter().map(|a| compile_term(a, scope, db)).collect::<Result<_, _>>()?)
        }
        Term::If(c, a, b) => {
            CTerm::If(Box::new([compile_term(c, scope, db)?, compile_term(a, scope, db)?, compile_term(b, scope, db)?]))
        }
        Term::Exists(q) => CTerm::Exists(Box::new(compile_loop(&q.generators, &q.predicate, scope, db)?)),
    })
}

/// Compiles generators over `scope` with the predicate split across levels.
fn compile_loop<'d>(
    gens: &[Generator],
    predicate: &Term,
    scope: &mut Scope<'d>,
    db: &'d Database,
) -> Result<Loop<'d>, RuntimeQueryError> {
    let base = scope.len();
    let own = bind(gens, db)?;
    let mut levels: Vec<Level<'d>> =
        own.iter().map(|(_, t)| Level { table: t, probe: None, filters: Vec::new() }).collect();
    scope.extend(own);
    let compiled: Result<Vec<_>, _> = predicate.conjuncts().into_iter().map(|c| compile_term(c, scope, db)).collect();
    scope.truncate(base);

    let mut pre = Vec::new();
    for c in compiled? {
        match c.max_frame() {
            Some(f) if f >= base => levels[f - base].filters.push(c),
            _ => pre.push(c),
        }
    }
    for (i, level) in levels.iter_mut().enumerate() {
        let frame = base + i;
        let pos = level.filters.iter().position(|c| c.probe_for(frame, level.table).is_some());
        if let Some(pos) = pos {
            let c = level.filters.remove(pos);
            let CTerm::Prim(_, mut args) = c else { unreachable!("probe_for matched an equality") };
            let (col, key) = match (args.pop(), args.pop()) {
                (Some(CTerm::Col(f, col)), Some(key)) if f == frame => (col, key),
                (Some(key), Some(CTerm::Col(_, col))) => (col, key),
                _ => unreachable!("probe_for matched a column operand"),
            };
            level.probe = Some((col, key));
        }
    }
    Ok(Loop { base, pre, levels })
}

impl<'d> CTerm<'d> {
    /// Innermost frame this term reads from outside any loop it contains.
    fn max_frame(&self) -> Option<usize> {
        self.max_frame_below(usize::MAX)
    }

    /// Innermost frame below `limit` that this term reads.
    fn max_frame_below(&self, limit: usize) -> Option<usize> {
        match self {
            CTerm::Const(_) => None,
            CTerm::Col(f, _) => (*f < limit).then_some(*f),
            CTerm::Prim(_, args) => args.iter().filter_map(|a| a.max_frame_below(limit)).max(),
            CTerm::If(parts) => parts.iter().filter_map(|a| a.max_frame_below(limit)).max(),
            CTerm::Exists(lp) => {
                let limit = limit.min(lp.base);
                lp.pre
                    .iter()
                    .chain(lp.levels.iter().flat_map(|l| l.filters.iter().chain(l.probe.as_ref().map(|(_, k)| k))))
                    .filter_map(|t| t.max_frame_below(limit))
                    .max()
            }
        }
    }

    /// Whether this is `frame.col == key` with `key` bound before `frame`.
    fn probe_for(&self, frame: usize, table: &Table) -> Option<()> {
        let CTerm::Prim(PrimOp::Eq, args) = self else { return None };
        let hashable = |col: usize| table.schema.columns[col].ty != ScalarType::Float;
        let earlier = |t: &CTerm| t.max_frame().is_none_or(|f| f < frame);
        match (&args[0], &args[1]) {
            (CTerm::Col(f, c), k) | (k, CTerm::Col(f, c)) if *f == frame && hashable(*c) && earlier(k) => Some(()),
            _ => None,
        }
    }

    fn eval(&self, frames: &[&'d [Scalar]], ix: &Indexes) -> Result<Scalar, RuntimeQueryError> {
        match self {
            CTerm::Const(c) => Ok(c.clone()),
            CTerm::Col(f, c) => Ok(frames[*f][*c].clone()),
            CTerm::Prim(PrimOp::And, args) => {
                Ok(Scalar::Bool(args[0].truth(frames, ix)? && args[1].truth(frames, ix)?))
            }
            CTerm::Prim(PrimOp::Or, args) => Ok(Scalar::Bool(args[0].truth(frames, ix)? || args[1].truth(frames, ix)?)),
            CTerm::Prim(op, args) => {
                let vals = args.iter().map(|a| a.eval(frames, ix)).collect::<Result<Vec<_>, _>>()?;
                apply_prim(*op, &vals)
            }
            CTerm::If(parts) => {
                if parts[0].truth(frames, ix)? {
                    parts[1].eval(frames, ix)
                } else {
                    parts[2].eval(frames, ix)
                }
            }
            CTerm::Exists(lp) => {
                let mut found = false;
                // Frames between the caller's depth and `base` are never read by the inner loop.
                let mut frames = frames.to_vec();
                frames.resize(lp.base, &[]);
                lp.run(0, &mut frames, ix, &mut |_| {
                    found = true;
                    Ok(false)
                })?;
                Ok(Scalar::Bool(found))
            }
        }
    }

    fn truth(&self, frames: &[&'d [Scalar]], ix: &Indexes) -> Result<bool, RuntimeQueryError> {
        self.eval(frames, ix)?.as_bool().ok_or_else(|| ill_typed("predicate is not boolean".to_string()))
    }
}

fn all<'d>(terms: &[CTerm<'d>], frames: &[&'d [Scalar]], ix: &Indexes) -> Result<bool, RuntimeQueryError> {
    for t in terms {
        if !t.truth(frames, ix)? {
            return Ok(false);
        }
    }
    Ok(true)
}

type Emit<'e, 'd> = dyn FnMut(&[&'d [Scalar]]) -> Result<bool, RuntimeQueryError> + 'e;

impl<'d> Loop<'d> {
    /// Enumerates bindings from `level` on; `emit` returns false to stop early.
    /// Returns false when stopped.
    fn run(
        &self,
        level: usize,
        frames: &mut Vec<&'d [Scalar]>,
        ix: &Indexes,
        emit: &mut Emit<'_, 'd>,
    ) -> Result<bool, RuntimeQueryError> {
        if level == 0 && !all(&self.pre, frames, ix)? {
            return Ok(true);
        }
        let Some(l) = self.levels.get(level) else {
            return emit(frames);
        };
        let mut visit = |row: &'d [Scalar], frames: &mut Vec<&'d [Scalar]>| -> Result<bool, RuntimeQueryError> {
            frames.push(row);
            let r = if all(&l.filters, frames, ix)? { self.run(level + 1, frames, ix, emit) } else { Ok(true) };
            frames.pop();
            r
        };
        match &l.probe {
            Some((col, key)) => {
                let key = key.eval(frames, ix)?;
                let index = ix.get(l.table, *col);
                for &i in index.get(&key).map(Vec::as_slice).unwrap_or(&[]) {
                    if !visit(&l.table.rows[i], frames)? {
                        return Ok(false);
                    }
                }
            }
            None => {
                for row in &l.table.rows {
                    if !visit(row, frames)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::ir::{Catalog, TableSchema};
    use crate::normalize::ExistsQuery;
    use crate::shred::{FlatBranch, OutputColumn};

    fn db() -> Database {
        let catalog = Catalog::from_tables([
            TableSchema::new("ligand", &[("ligand_id", ScalarType::Int), ("name", ScalarType::String)], &["ligand_id"]),
            TableSchema::new(
                "pdb_structure",
                &[("pdb_id", ScalarType::String), ("ligand_id", ScalarType::Int)],
                &["pdb_id"],
            ),
        ])
        .unwrap();
        let mut rows = BTreeMap::new();
        rows.insert(
            "ligand".to_string(),
            (1..=3).map(|i| vec![Scalar::Int(i), Scalar::from(format!("L{i}"))]).collect(),
        );
        rows.insert("pdb_structure".to_string(), vec![vec![Scalar::from("1ABC"), Scalar::Int(2)]]);
        Database::from_rows(catalog, rows).unwrap()
    }

    fn field(v: &str, c: &str) -> Term {
        Term::Field { var: v.into(), column: c.into() }
    }

    fn query(generators: Vec<Generator>, predicate: Term, select: Vec<(Term, ScalarType)>) -> FlatQuery {
        FlatQuery {
            parent: None,
            columns: select
                .iter()
                .enumerate()
                .map(|(i, (_, ty))| OutputColumn { label: format!("c{i}"), ty: *ty })
                .collect(),
            index_slots: vec![],
            parent_width: 0,
            branches: vec![FlatBranch {
                generators,
                predicate,
                select: select.into_iter().map(|(t, _)| t).collect(),
                index: vec![],
            }],
        }
    }

    fn gen(b: &str, t: &str) -> Generator {
        Generator { binder: b.into(), table: t.into() }
    }

    #[test]
    fn true_predicate_projects_every_row() {
        let q = query(
            vec![gen("l", "ligand")],
            Term::Const(Scalar::Bool(true)),
            vec![(field("l", "name"), ScalarType::String)],
        );
        let rows = exec_flat(&q, &db()).unwrap();
        assert_eq!(rows, vec![vec![Scalar::from("L1")], vec![Scalar::from("L2")], vec![Scalar::from("L3")]]);
    }

    #[test]
    fn exists_atom_is_true_only_for_the_ligand_with_a_structure() {
        let exists = Term::Exists(Box::new(ExistsQuery {
            generators: vec![gen("p", "pdb_structure")],
            predicate: Term::prim(PrimOp::Eq, vec![field("p", "ligand_id"), field("l", "ligand_id")]),
        }));
        let q = query(
            vec![gen("l", "ligand")],
            Term::Const(Scalar::Bool(true)),
            vec![(field("l", "ligand_id"), ScalarType::Int), (exists, ScalarType::Bool)],
        );
        let rows = exec_flat(&q, &db()).unwrap();
        let has: Vec<_> = rows.iter().map(|r| r[1].clone()).collect();
        assert_eq!(has, vec![Scalar::Bool(false), Scalar::Bool(true), Scalar::Bool(false)]);
    }

    #[test]
    fn correlated_exists_runs_under_its_outer_binding() {
        // The outer reference sits beside an inner one in a single conjunct, and the
        // atom is checked before the second outer generator is bound.
        let bound = Term::If(
            Box::new(Term::prim(PrimOp::Eq, vec![field("a", "ligand_id"), Term::Const(Scalar::Int(1))])),
            Box::new(field("a", "ligand_id")),
            Box::new(Term::Const(Scalar::Int(3))),
        );
        let exists = Term::Exists(Box::new(ExistsQuery {
            generators: vec![gen("p", "pdb_structure")],
            predicate: Term::prim(PrimOp::Lt, vec![field("p", "ligand_id"), bound]),
        }));
        let q = query(
            vec![gen("a", "ligand"), gen("b", "ligand")],
            exists,
            vec![(field("a", "ligand_id"), ScalarType::Int), (field("b", "ligand_id"), ScalarType::Int)],
        );
        let rows = exec_flat(&q, &db()).unwrap();
        let firsts: Vec<i64> = rows.iter().map(|r| r[0].as_int().unwrap()).collect();
        assert_eq!(firsts, vec![2, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn join_order_is_lexicographic_in_generators() {
        let q = query(
            vec![gen("a", "ligand"), gen("b", "ligand")],
            Term::prim(PrimOp::Le, vec![field("a", "ligand_id"), field("b", "ligand_id")]),
            vec![(field("a", "ligand_id"), ScalarType::Int), (field("b", "ligand_id"), ScalarType::Int)],
        );
        let rows = exec_flat(&q, &db()).unwrap();
        let pairs: Vec<(i64, i64)> = rows.iter().map(|r| (r[0].as_int().unwrap(), r[1].as_int().unwrap())).collect();
        assert_eq!(pairs, vec![(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)]);
    }

    #[test]
    fn probe_join_matches_scan_join() {
        let eq = Term::prim(PrimOp::Eq, vec![field("p", "ligand_id"), field("l", "ligand_id")]);
        let q = query(
            vec![gen("p", "pdb_structure"), gen("l", "ligand")],
            eq,
            vec![(field("l", "name"), ScalarType::String), (field("p", "pdb_id"), ScalarType::String)],
        );
        assert_eq!(exec_flat(&q, &db()).unwrap(), vec![vec![Scalar::from("L2"), Scalar::from("1ABC")]]);
    }

    #[test]
    fn runtime_errors_surface() {
        let q = query(
            vec![gen("l", "ligand")],
            Term::Const(Scalar::Bool(true)),
            vec![(
                Term::prim(PrimOp::Div, vec![field("l", "ligand_id"), Term::Const(Scalar::Int(0))]),
                ScalarType::Int,
            )],
        );
        assert_eq!(exec_flat(&q, &db()), Err(RuntimeQueryError::DivisionByZero));
    }
}
