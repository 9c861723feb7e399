use std::fmt;

use serde::{Deserialize, Serialize};

/// An attribute value carried by a token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Symbol(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Symbol(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    /// Non-empty, duplicate-free list of symbols; the first one is the default.
    Symbols(Vec<String>),
    Integer,
}

impl Domain {
    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Symbols(symbols), Value::Symbol(s)) => symbols.iter().any(|x| x == s),
            (Domain::Integer, Value::Int(_)) => true,
            _ => false,
        }
    }

    pub fn default_value(&self) -> Value {
        match self {
            Domain::Symbols(symbols) => Value::Symbol(symbols.first().cloned().unwrap_or_default()),
            Domain::Integer => Value::Int(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub domain: Domain,
}

impl Attribute {
    pub fn symbols(name: impl Into<String>, symbols: &[&str]) -> Self {
        Attribute { name: name.into(), domain: Domain::Symbols(symbols.iter().map(|s| s.to_string()).collect()) }
    }

    pub fn integer(name: impl Into<String>) -> Self {
        Attribute { name: name.into(), domain: Domain::Integer }
    }
}

/// A kind of flowthing: what a machine's flow carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThingKind {
    pub name: String,
    pub attributes: Vec<Attribute>,
}

impl ThingKind {
    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}
