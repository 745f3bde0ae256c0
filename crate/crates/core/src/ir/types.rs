use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::SchemaError;

/// Primitive column and scalar-expression types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScalarType {
    Int,
    Float,
    Bool,
    String,
}

impl ScalarType {
    /// A constant of this type, used to fill index slots that a union branch does not own.
    pub fn placeholder(self) -> Scalar {
        match self {
            ScalarType::Int => Scalar::Int(0),
            ScalarType::Float => Scalar::Float(0.0),
            ScalarType::Bool => Scalar::Bool(false),
            ScalarType::String => Scalar::Str(String::new()),
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalarType::Int => "Int",
            ScalarType::Float => "Float",
            ScalarType::Bool => "Bool",
            ScalarType::String => "String",
        };
        f.write_str(s)
    }
}

/// A primitive value. Strings compare byte-wise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Scalar {
    pub fn ty(&self) -> ScalarType {
        match self {
            Scalar::Int(_) => ScalarType::Int,
            Scalar::Float(_) => ScalarType::Float,
            Scalar::Bool(_) => ScalarType::Bool,
            Scalar::Str(_) => ScalarType::String,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Scalar::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Str(s) => Some(s),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Scalar::Int(_) => 0,
            Scalar::Float(_) => 1,
            Scalar::Bool(_) => 2,
            Scalar::Str(_) => 3,
        }
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scalar {}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order: values of different types order by type tag, floats by `total_cmp`.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Scalar::Int(i) => i.hash(state),
            Scalar::Float(x) => x.to_bits().hash(state),
            Scalar::Bool(b) => b.hash(state),
            Scalar::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(i) => write!(f, "{i}"),
            Scalar::Float(x) => write!(f, "{x:?}"),
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Float(v)
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Str(v)
    }
}

/// Type of a query or of any subexpression that denotes data.
///
/// Record field order is kept for rendering, but two record types are equal
/// when they have the same labels with equal types, in any order.
#[derive(Debug, Clone)]
pub enum QueryType {
    Scalar(ScalarType),
    Record(Vec<(String, QueryType)>),
    Collection(Box<QueryType>),
}

impl QueryType {
    pub fn collection(element: QueryType) -> Self {
        QueryType::Collection(Box::new(element))
    }

    pub fn record<I, S>(fields: I) -> Self
    where
        I: IntoIterator<Item = (S, QueryType)>,
        S: Into<String>,
    {
        QueryType::Record(fields.into_iter().map(|(l, t)| (l.into(), t)).collect())
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, QueryType::Collection(_))
    }

    pub fn element(&self) -> Option<&QueryType> {
        match self {
            QueryType::Collection(e) => Some(e),
            _ => None,
        }
    }

    pub fn field(&self, label: &str) -> Option<&QueryType> {
        match self {
            QueryType::Record(fields) => fields.iter().find(|(l, _)| l == label).map(|(_, t)| t),
            _ => None,
        }
    }

    /// Number of `Collection` constructors anywhere in the type, including the outermost.
    pub fn collection_count(&self) -> usize {
        match self {
            QueryType::Scalar(_) => 0,
            QueryType::Record(fields) => fields.iter().map(|(_, t)| t.collection_count()).sum(),
            QueryType::Collection(e) => 1 + e.collection_count(),
        }
    }
}

/// Free-function form of [`QueryType::collection_count`].
pub fn collection_count(t: &QueryType) -> usize {
    t.collection_count()
}

impl PartialEq for QueryType {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (QueryType::Scalar(a), QueryType::Scalar(b)) => a == b,
            (QueryType::Collection(a), QueryType::Collection(b)) => a == b,
            (QueryType::Record(a), QueryType::Record(b)) => {
                a.len() == b.len() && a.iter().all(|(l, t)| b.iter().find(|(m, _)| m == l).is_some_and(|(_, u)| t == u))
            }
            _ => false,
        }
    }
}

impl Eq for QueryType {}

impl fmt::Display for QueryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryType::Scalar(s) => write!(f, "{s}"),
            QueryType::Collection(e) => write!(f, "Collection({e})"),
            QueryType::Record(fields) => {
                f.write_str("Record{")?;
                for (i, (l, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}: {t}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ScalarType,
}

/// A base table: ordered typed columns and a key that identifies rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<Column>,
    pub key: Vec<String>,
}

impl TableSchema {
    pub fn new<S: Into<String>>(name: S, columns: &[(&str, ScalarType)], key: &[&str]) -> Self {
        TableSchema {
            name: name.into(),
            columns: columns.iter().map(|(n, t)| Column { name: (*n).to_string(), ty: *t }).collect(),
            key: key.iter().map(|k| (*k).to_string()).collect(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column_type(&self, name: &str) -> Option<ScalarType> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.ty)
    }

    pub fn row_type(&self) -> QueryType {
        QueryType::Record(self.columns.iter().map(|c| (c.name.clone(), QueryType::Scalar(c.ty))).collect())
    }

    pub fn key_indices(&self) -> Vec<usize> {
        self.key.iter().filter_map(|k| self.column_index(k)).collect()
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(SchemaError::DuplicateColumn { table: self.name.clone(), column: c.name.clone() });
            }
        }
        if self.key.is_empty() {
            return Err(SchemaError::EmptyKey(self.name.clone()));
        }
        for k in &self.key {
            if !seen.contains(k.as_str()) {
                return Err(SchemaError::KeyNotAColumn { table: self.name.clone(), column: k.clone() });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct CatalogDoc {
    tables: Vec<TableSchema>,
}

/// The set of table schemas a query may reference.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    tables: BTreeMap<String, TableSchema>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tables<I: IntoIterator<Item = TableSchema>>(tables: I) -> Result<Self, SchemaError> {
        let mut catalog = Catalog::new();
        for t in tables {
            catalog.insert(t)?;
        }
        Ok(catalog)
    }

    pub fn insert(&mut self, table: TableSchema) -> Result<(), SchemaError> {
        table.validate()?;
        if self.tables.contains_key(&table.name) {
            return Err(SchemaError::DuplicateTable(table.name));
        }
        self.tables.insert(table.name.clone(), table);
        Ok(())
    }

    /// Inserts without validation. Lets tests build schemas that violate the key invariant.
    pub fn insert_unchecked(&mut self, table: TableSchema) {
        self.tables.insert(table.name.clone(), table);
    }

    pub fn get(&self, name: &str) -> Option<&TableSchema> {
        self.tables.get(name)
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableSchema> {
        self.tables.values()
    }

    /// Parses `{ "tables": [ { "name", "columns": [ {"name", "type"} ], "key": [..] } ] }`.
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let doc: CatalogDoc = serde_json::from_str(text)?;
        Self::from_tables(doc.tables)
    }

    pub fn to_json(&self) -> String {
        let doc = CatalogDoc { tables: self.tables.values().cloned().collect() };
        serde_json::to_string_pretty(&doc).expect("catalog serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synonyms() -> QueryType {
        QueryType::collection(QueryType::record([
            ("name", QueryType::Scalar(ScalarType::String)),
            ("synonyms", QueryType::collection(QueryType::Scalar(ScalarType::String))),
        ]))
    }

    #[test]
    fn collection_counts() {
        let flat = QueryType::collection(QueryType::record([("name", QueryType::Scalar(ScalarType::String))]));
        assert_eq!(flat.collection_count(), 1);
        assert_eq!(synonyms().collection_count(), 2);
        let triple = QueryType::collection(QueryType::record([(
            "a",
            QueryType::collection(QueryType::record([(
                "b",
                QueryType::collection(QueryType::Scalar(ScalarType::Int)),
            )])),
        )]));
        assert_eq!(triple.collection_count(), 3);
        assert_eq!(QueryType::Scalar(ScalarType::Int).collection_count(), 0);
    }

    #[test]
    fn record_equality_ignores_order() {
        let a =
            QueryType::record([("x", QueryType::Scalar(ScalarType::Int)), ("y", QueryType::Scalar(ScalarType::Bool))]);
        let b =
            QueryType::record([("y", QueryType::Scalar(ScalarType::Bool)), ("x", QueryType::Scalar(ScalarType::Int))]);
        assert_eq!(a, b);
        let c = QueryType::record([("x", QueryType::Scalar(ScalarType::Int))]);
        assert_ne!(a, c);
    }

    #[test]
    fn catalog_json_roundtrip_and_validation() {
        let text = r#"{"tables":[{"name":"ligand","columns":[{"name":"ligand_id","type":"Int"},{"name":"name","type":"String"}],"key":["ligand_id"]}]}"#;
        let catalog = Catalog::from_json(text).unwrap();
        let t = catalog.get("ligand").unwrap();
        assert_eq!(t.column_type("name"), Some(ScalarType::String));
        assert_eq!(Catalog::from_json(&catalog.to_json()).unwrap(), catalog);

        let bad_key = r#"{"tables":[{"name":"t","columns":[{"name":"a","type":"Int"}],"key":["b"]}]}"#;
        assert!(matches!(Catalog::from_json(bad_key), Err(SchemaError::KeyNotAColumn { .. })));
        let no_key = r#"{"tables":[{"name":"t","columns":[{"name":"a","type":"Int"}],"key":[]}]}"#;
        assert!(matches!(Catalog::from_json(no_key), Err(SchemaError::EmptyKey(_))));
    }

    #[test]
    fn scalar_order_is_bytewise_for_strings() {
        assert!(Scalar::from("B") < Scalar::from("a"));
        assert!(Scalar::from("a") < Scalar::from("b"));
        assert_eq!(Scalar::Float(1.5), Scalar::Float(1.5));
    }
}
