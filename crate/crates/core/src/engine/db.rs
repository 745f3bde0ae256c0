use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::ir::{Catalog, Scalar, ScalarType, TableSchema};

use super::LoadError;

/// A table's rows, each aligned with the schema's column order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: TableSchema,
    pub rows: Vec<Vec<Scalar>>,
}

/// An immutable in-memory relational database.
#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    catalog: Catalog,
    tables: BTreeMap<String, Table>,
}

impl Database {
    /// An empty database over the given schemas.
    pub fn empty(catalog: Catalog) -> Self {
        let tables =
            catalog.tables().map(|s| (s.name.clone(), Table { schema: s.clone(), rows: Vec::new() })).collect();
        Database { catalog, tables }
    }

    /// Builds a database, checking row types and key uniqueness.
    pub fn from_rows(catalog: Catalog, rows: BTreeMap<String, Vec<Vec<Scalar>>>) -> Result<Self, LoadError> {
        let mut db = Database::empty(catalog);
        for (name, rows) in rows {
            let table = db.tables.get_mut(&name).ok_or_else(|| LoadError::SchemaViolation {
                table: name.clone(),
                reason: "no such table in schema".into(),
            })?;
            for (i, r) in rows.iter().enumerate() {
                check_row(&table.schema, r).map_err(|reason| LoadError::SchemaViolation {
                    table: name.clone(),
                    reason: format!("row {i}: {reason}"),
                })?;
            }
            table.rows = rows;
            check_keys(table)?;
        }
        Ok(db)
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn row_counts(&self) -> BTreeMap<String, usize> {
        self.tables.iter().map(|(n, t)| (n.clone(), t.rows.len())).collect()
    }

    /// Writes `schema.json` and one `<table>.csv` per table into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), LoadError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("schema.json"), self.catalog.to_json())?;
        for t in self.tables.values() {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_path(dir.join(format!("{}.csv", t.schema.name)))?;
            w.write_record(t.schema.columns.iter().map(|c| c.name.as_str()))?;
            for r in &t.rows {
                w.write_record(r.iter().map(csv_field))?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn csv_field(s: &Scalar) -> String {
    match s {
        Scalar::Int(i) => i.to_string(),
        Scalar::Float(x) => x.to_string(),
        Scalar::Bool(b) => b.to_string(),
        Scalar::Str(s) => s.clone(),
    }
}

fn check_row(schema: &TableSchema, row: &[Scalar]) -> Result<(), String> {
    if row.len() != schema.columns.len() {
        return Err(format!("{} values for {} columns", row.len(), schema.columns.len()));
    }
    for (v, c) in row.iter().zip(&schema.columns) {
        if v.ty() != c.ty {
            return Err(format!("column `{}` expects {}, found {}", c.name, c.ty, v.ty()));
        }
    }
    Ok(())
}

fn check_keys(table: &Table) -> Result<(), LoadError> {
    let idx = table.schema.key_indices();
    let mut seen = HashSet::with_capacity(table.rows.len());
    for r in &table.rows {
        let key: Vec<&Scalar> = idx.iter().map(|&i| &r[i]).collect();
        if !seen.insert(key.clone()) {
            return Err(LoadError::DuplicateKey {
                table: table.schema.name.clone(),
                key: key.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", "),
            });
        }
    }
    Ok(())
}

fn parse_field(raw: &str, ty: ScalarType) -> Result<Scalar, String> {
    match ty {
        ScalarType::Int => raw.parse().map(Scalar::Int).map_err(|e| format!("{e}")),
        ScalarType::Float => raw.parse().map(Scalar::Float).map_err(|e| format!("{e}")),
        ScalarType::Bool => match raw {
            "true" => Ok(Scalar::Bool(true)),
            "false" => Ok(Scalar::Bool(false)),
            other => Err(format!("expected true or false, found {other:?}")),
        },
        ScalarType::String => Ok(Scalar::Str(raw.to_string())),
    }
}

/// Loads a schema document and one CSV file per table (header row = column labels).
pub fn load_database(schema_file: &Path, data_dir: &Path) -> Result<Database, LoadError> {
    let catalog = Catalog::from_json(&fs::read_to_string(schema_file)?)?;
    let mut rows = BTreeMap::new();
    for schema in catalog.tables() {
        let path = data_dir.join(format!("{}.csv", schema.name));
        rows.insert(schema.name.clone(), read_table(schema, &path)?);
    }
    Database::from_rows(catalog, rows)
}

fn read_table(schema: &TableSchema, path: &Path) -> Result<Vec<Vec<Scalar>>, LoadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let header = reader.headers()?.clone();
    // Column order in the file may differ from the schema.
    let mut positions = Vec::with_capacity(schema.columns.len());
    for c in &schema.columns {
        let pos = header.iter().position(|h| h == c.name).ok_or_else(|| LoadError::SchemaViolation {
            table: schema.name.clone(),
            reason: format!("missing column `{}` in header", c.name),
        })?;
        positions.push(pos);
    }
    if header.len() != schema.columns.len() {
        return Err(LoadError::SchemaViolation {
            table: schema.name.clone(),
            reason: format!("header has {} columns, schema has {}", header.len(), schema.columns.len()),
        });
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(positions.len());
        for (c, &p) in schema.columns.iter().zip(&positions) {
            let raw = record.get(p).unwrap_or_default();
            row.push(parse_field(raw, c.ty).map_err(|msg| LoadError::Parse {
                table: schema.name.clone(),
                line: line + 2,
                column: c.name.clone(),
                msg,
            })?);
        }
        rows.push(row);
    }
    Ok(rows)
}
