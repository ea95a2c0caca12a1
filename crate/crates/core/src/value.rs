//! Scalar values, variable domains and valuations.

use std::collections::BTreeMap;
use std::fmt;

/// A scalar program value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            Value::Int(_) => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Static type of an expression or variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
        }
    }
}

/// The set of values a variable may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Bool,
    /// Inclusive integer range `lo..hi`.
    Range(i64, i64),
    /// Unbounded integers. Explicit exploration refuses these.
    Int,
}

impl Domain {
    pub fn ty(self) -> Type {
        match self {
            Domain::Bool => Type::Bool,
            Domain::Range(..) | Domain::Int => Type::Int,
        }
    }

    pub fn is_finite(self) -> bool {
        !matches!(self, Domain::Int)
    }

    pub fn contains(self, v: Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Range(lo, hi), Value::Int(i)) => lo <= i && i <= hi,
            (Domain::Int, Value::Int(_)) => true,
            _ => false,
        }
    }

    /// Values in ascending order, or `None` for an unbounded domain.
    pub fn values(self) -> Option<Vec<Value>> {
        match self {
            Domain::Bool => Some(vec![Value::Bool(false), Value::Bool(true)]),
            Domain::Range(lo, hi) => Some((lo..=hi).map(Value::Int).collect()),
            Domain::Int => None,
        }
    }

    pub fn size(self) -> Option<u64> {
        match self {
            Domain::Bool => Some(2),
            Domain::Range(lo, hi) if lo <= hi => Some((hi as i128 - lo as i128 + 1) as u64),
            Domain::Range(..) => Some(0),
            Domain::Int => None,
        }
    }

    /// The smallest value of the domain, used for canonical padding.
    pub fn default_value(self) -> Value {
        match self {
            Domain::Bool => Value::Bool(false),
            Domain::Range(lo, _) => Value::Int(lo),
            Domain::Int => Value::Int(0),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => f.write_str("bool"),
            Domain::Range(lo, hi) => write!(f, "int {lo}..{hi}"),
            Domain::Int => f.write_str("int"),
        }
    }
}

/// A variable declaration.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        VarDecl {
            name: name.into(),
            domain,
        }
    }
}

/// A total map from variable names to values, ordered by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation(pub BTreeMap<String, Value>);

impl Valuation {
    pub fn new() -> Self {
        Valuation(BTreeMap::new())
    }

    pub fn get(&self, name: &str) -> Option<Value> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, v: Value) {
        self.0.insert(name.into(), v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<(String, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}
