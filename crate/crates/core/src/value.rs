//! Nested query results.

use std::cmp::Ordering;
use std::fmt;

use serde_json::json;

use crate::ir::Scalar;

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Record(Vec<(String, Value)>),
    List(Vec<Value>),
}

impl From<Scalar> for Value {
    fn from(s: Scalar) -> Self {
        match s {
            Scalar::Int(i) => Value::Int(i),
            Scalar::Float(x) => Value::Float(x),
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Str(s) => Value::Str(s),
        }
    }
}

impl From<&Scalar> for Value {
    fn from(s: &Scalar) -> Self {
        s.clone().into()
    }
}

impl Value {
    pub fn as_scalar(&self) -> Option<Scalar> {
        Some(match self {
            Value::Int(i) => Scalar::Int(*i),
            Value::Float(x) => Scalar::Float(*x),
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Str(s) => Scalar::Str(s.clone()),
            _ => return None,
        })
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(v) => Some(v),
            _ => None,
        }
    }

    pub fn field(&self, label: &str) -> Option<&Value> {
        match self {
            Value::Record(fields) => fields.iter().find(|(l, _)| l == label).map(|(_, v)| v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            Value::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Float(_) => 1,
            Value::Bool(_) => 2,
            Value::Str(_) => 3,
            Value::Record(_) => 4,
            Value::List(_) => 5,
        }
    }

    /// Canonical representative under bag semantics: record fields sorted by
    /// label and every list sorted, recursively.
    pub fn canonical(&self) -> Value {
        match self {
            Value::Record(fields) => {
                let mut fields: Vec<_> = fields.iter().map(|(l, v)| (l.clone(), v.canonical())).collect();
                fields.sort_by(|a, b| a.0.cmp(&b.0));
                Value::Record(fields)
            }
            Value::List(items) => {
                let mut items: Vec<_> = items.iter().map(Value::canonical).collect();
                items.sort();
                Value::List(items)
            }
            v => v.clone(),
        }
    }

    /// Equality of nested bags: lists compared as multisets at every level.
    pub fn bag_eq(&self, other: &Value) -> bool {
        self.canonical() == other.canonical()
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Value::Int(i) => json!(i),
            Value::Float(x) => json!(x),
            Value::Bool(b) => json!(b),
            Value::Str(s) => json!(s),
            Value::Record(fields) => {
                serde_json::Value::Object(fields.iter().map(|(l, v)| (l.clone(), v.to_json())).collect())
            }
            Value::List(items) => serde_json::Value::Array(items.iter().map(Value::to_json).collect()),
        }
    }
}

/// Structural equality; record fields are matched by label.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Record(a), Value::Record(b)) => {
                a.len() == b.len() && a.iter().all(|(l, v)| b.iter().find(|(m, _)| m == l).is_some_and(|(_, w)| v == w))
            }
            (Value::List(a), Value::List(b)) => a == b,
            _ => self.cmp(other) == Ordering::Equal,
        }
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.as_bytes().cmp(b.as_bytes()),
            (Value::Record(a), Value::Record(b)) => a.cmp(b),
            (Value::List(a), Value::List(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::Record(fields) => {
                f.write_str("(")?;
                for (i, (l, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l} = {v}")?;
                }
                f.write_str(")")
            }
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bag_equality_ignores_order_at_every_level() {
        let a = Value::List(vec![
            Value::Record(vec![
                ("n".into(), Value::Int(1)),
                ("s".into(), Value::List(vec![Value::Int(2), Value::Int(1)])),
            ]),
            Value::Record(vec![("n".into(), Value::Int(0)), ("s".into(), Value::List(vec![]))]),
        ]);
        let b = Value::List(vec![
            Value::Record(vec![("s".into(), Value::List(vec![])), ("n".into(), Value::Int(0))]),
            Value::Record(vec![
                ("n".into(), Value::Int(1)),
                ("s".into(), Value::List(vec![Value::Int(1), Value::Int(2)])),
            ]),
        ]);
        assert!(a.bag_eq(&b));
        assert_ne!(a, b);
        let c = Value::List(vec![Value::Int(1), Value::Int(1)]);
        let d = Value::List(vec![Value::Int(1)]);
        assert!(!c.bag_eq(&d));
    }
}
