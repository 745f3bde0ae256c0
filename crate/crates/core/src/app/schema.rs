//! The table subset the mini application reads.

use std::collections::{BTreeMap, HashSet};

use crate::engine::{Database, LoadError};
use crate::ir::{Catalog, Scalar, ScalarType as T, TableSchema};

pub fn catalog() -> Catalog {
    Catalog::from_tables([
        TableSchema::new(
            "ligand",
            &[
                ("ligand_id", T::Int),
                ("name", T::String),
                ("type", T::String),
                ("approved", T::Bool),
                ("radioactive", T::Bool),
                ("labelled", T::Bool),
                ("in_gtip", T::Bool),
                ("in_gtmp", T::Bool),
                ("endogenous", T::Bool),
                ("clinical_use_text", T::String),
                ("comments_text", T::String),
            ],
            &["ligand_id"],
        ),
        TableSchema::new(
            "ligand2synonym",
            &[("ligand_id", T::Int), ("synonym", T::String), ("display", T::Bool)],
            &["ligand_id", "synonym"],
        ),
        TableSchema::new("pdb_structure", &[("pdb_id", T::String), ("ligand_id", T::Int)], &["pdb_id"]),
        TableSchema::new(
            "disease",
            &[("disease_id", T::Int), ("name", T::String), ("description_text", T::String), ("in_gtip", T::Bool)],
            &["disease_id"],
        ),
        TableSchema::new(
            "family",
            &[("family_id", T::Int), ("name", T::String), ("parent_id", T::Int), ("target_type", T::String)],
            &["family_id"],
        ),
        TableSchema::new(
            "object",
            &[
                ("object_id", T::Int),
                ("name", T::String),
                ("family_id", T::Int),
                ("nomenclature", T::String),
                ("overview_text", T::String),
            ],
            &["object_id"],
        ),
        TableSchema::new(
            "interaction",
            &[
                ("interaction_id", T::Int),
                ("object_id", T::Int),
                ("ligand_id", T::Int),
                ("action", T::String),
                ("affinity", T::Float),
                ("comments_text", T::String),
            ],
            &["interaction_id"],
        ),
        TableSchema::new(
            "reference",
            &[
                ("reference_id", T::Int),
                ("pubmed_id", T::Int),
                ("title", T::String),
                ("authors", T::String),
                ("year", T::Int),
            ],
            &["reference_id"],
        ),
        TableSchema::new(
            "disease2object",
            &[("disease_id", T::Int), ("object_id", T::Int)],
            &["disease_id", "object_id"],
        ),
        TableSchema::new(
            "disease2ligand",
            &[("disease_id", T::Int), ("ligand_id", T::Int)],
            &["disease_id", "ligand_id"],
        ),
        TableSchema::new(
            "object_database_link",
            &[("object_id", T::Int), ("database", T::String), ("accession", T::String)],
            &["object_id", "database", "accession"],
        ),
        TableSchema::new("object_previous_name", &[("object_id", T::Int), ("name", T::String)], &["object_id", "name"]),
    ])
    .expect("static schema is valid")
}

/// `(table, column, referenced table)`; a `family.parent_id` of 0 marks a root family.
pub const FOREIGN_KEYS: &[(&str, &str, &str)] = &[
    ("ligand2synonym", "ligand_id", "ligand"),
    ("pdb_structure", "ligand_id", "ligand"),
    ("family", "parent_id", "family"),
    ("object", "family_id", "family"),
    ("interaction", "object_id", "object"),
    ("interaction", "ligand_id", "ligand"),
    ("disease2object", "disease_id", "disease"),
    ("disease2object", "object_id", "object"),
    ("disease2ligand", "disease_id", "disease"),
    ("disease2ligand", "ligand_id", "ligand"),
    ("object_database_link", "object_id", "object"),
    ("object_previous_name", "object_id", "object"),
];

/// Checks that every cross-table id resolves.
pub fn validate_references(db: &Database) -> Result<(), LoadError> {
    let mut keys: BTreeMap<&str, HashSet<&Scalar>> = BTreeMap::new();
    for t in db.tables() {
        let k = t.schema.key_indices();
        if k.len() == 1 {
            keys.insert(t.schema.name.as_str(), t.rows.iter().map(|r| &r[k[0]]).collect());
        }
    }
    for &(table, column, target) in FOREIGN_KEYS {
        let t = db.table(table).ok_or_else(|| violation(table, "table missing".into()))?;
        let col =
            t.schema.column_index(column).ok_or_else(|| violation(table, format!("column `{column}` missing")))?;
        let targets = keys.get(target).ok_or_else(|| violation(target, "table missing".into()))?;
        for r in &t.rows {
            let v = &r[col];
            if table == "family" && *v == Scalar::Int(0) {
                continue;
            }
            if !targets.contains(v) {
                return Err(violation(table, format!("{column} = {v} does not resolve in `{target}`")));
            }
        }
    }
    Ok(())
}

fn violation(table: &str, reason: String) -> LoadError {
    LoadError::SchemaViolation { table: table.to_string(), reason }
}
