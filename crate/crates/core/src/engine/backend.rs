use std::sync::Mutex;

use rusqlite::types::ValueRef;
use rusqlite::Connection;

use crate::ir::{Catalog, Scalar, ScalarType};
use crate::shred::{to_sql, FlatQuery, FlatRow};

use super::{exec_flat, Database, EngineError};

/// Something that can answer flat queries over a fixed set of tables.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn catalog(&self) -> &Catalog;
    /// Rows carry exactly the query's output columns, in [`FlatQuery::output_labels`] order.
    fn execute(&self, q: &FlatQuery) -> Result<Vec<FlatRow>, EngineError>;
}

impl Backend for Database {
    fn name(&self) -> &str {
        "memory"
    }

    fn catalog(&self) -> &Catalog {
        Database::catalog(self)
    }

    fn execute(&self, q: &FlatQuery) -> Result<Vec<FlatRow>, EngineError> {
        Ok(exec_flat(q, self)?)
    }
}

/// An SQLite database mirroring a [`Database`], queried through the generated SQL text.
pub struct SqliteBackend {
    catalog: Catalog,
    conn: Mutex<Connection>,
}

fn sql_type(t: ScalarType) -> &'static str {
    match t {
        ScalarType::Int | ScalarType::Bool => "INTEGER",
        ScalarType::Float => "REAL",
        ScalarType::String => "TEXT",
    }
}

impl SqliteBackend {
    /// Opens the backend named by a connection string. Only `sqlite::memory:` is recognised.
    pub fn connect(conn_str: &str, db: &Database) -> Result<Self, EngineError> {
        match conn_str {
            "sqlite::memory:" => Self::mirror(db),
            other => Err(EngineError::Backend(format!("unsupported connection string `{other}`"))),
        }
    }

    /// Copies every table of `db` into a fresh in-memory SQLite database.
    pub fn mirror(db: &Database) -> Result<Self, EngineError> {
        let mut conn = Connection::open_in_memory()?;
        let tx = conn.transaction()?;
        for t in db.tables() {
            let cols: Vec<String> =
                t.schema.columns.iter().map(|c| format!("{} {} NOT NULL", c.name, sql_type(c.ty))).collect();
            tx.execute_batch(&format!(
                "CREATE TABLE {} ({}, PRIMARY KEY ({}))",
                t.schema.name,
                cols.join(", "),
                t.schema.key.join(", ")
            ))?;
            let marks = vec!["?"; t.schema.columns.len()].join(", ");
            let mut stmt = tx.prepare(&format!("INSERT INTO {} VALUES ({marks})", t.schema.name))?;
            for row in &t.rows {
                stmt.execute(rusqlite::params_from_iter(row.iter().map(to_sql_value)))?;
            }
        }
        tx.commit()?;
        Ok(SqliteBackend { catalog: db.catalog().clone(), conn: Mutex::new(conn) })
    }
}

fn to_sql_value(s: &Scalar) -> rusqlite::types::Value {
    use rusqlite::types::Value as V;
    match s {
        Scalar::Int(i) => V::Integer(*i),
        Scalar::Float(x) => V::Real(*x),
        Scalar::Bool(b) => V::Integer(*b as i64),
        Scalar::Str(s) => V::Text(s.clone()),
    }
}

fn from_sql_value(v: ValueRef<'_>, ty: ScalarType) -> Result<Scalar, EngineError> {
    let bad = || EngineError::Backend(format!("column of type {ty} returned {v:?}"));
    Ok(match (ty, v) {
        (ScalarType::Int, ValueRef::Integer(i)) => Scalar::Int(i),
        (ScalarType::Float, ValueRef::Real(x)) => Scalar::Float(x),
        (ScalarType::Float, ValueRef::Integer(i)) => Scalar::Float(i as f64),
        (ScalarType::Bool, ValueRef::Integer(i)) => Scalar::Bool(i != 0),
        (ScalarType::String, ValueRef::Text(t)) => Scalar::Str(String::from_utf8(t.to_vec()).map_err(|_| bad())?),
        _ => return Err(bad()),
    })
}

impl Backend for SqliteBackend {
    fn name(&self) -> &str {
        "sqlite"
    }

    fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    fn execute(&self, q: &FlatQuery) -> Result<Vec<FlatRow>, EngineError> {
        let sql = to_sql(q);
        let types = q.output_types();
        let conn = self.conn.lock().map_err(|_| EngineError::Backend("connection poisoned".into()))?;
        let mut stmt = conn.prepare(&sql.text)?;
        let width = types.len().max(1);
        if stmt.column_count() != width {
            return Err(EngineError::Backend(format!(
                "query returned {} columns, expected {}",
                stmt.column_count(),
                width
            )));
        }
        let mut rows = stmt.query([])?;
        let mut out = Vec::new();
        while let Some(r) = rows.next()? {
            let mut row = Vec::with_capacity(types.len());
            for (i, ty) in types.iter().enumerate() {
                row.push(from_sql_value(r.get_ref(i)?, *ty)?);
            }
            out.push(row);
        }
        Ok(out)
    }
}
