//! Step values and their canonical rendering.

use std::collections::BTreeMap;
use std::fmt;

use folquot::ledger::render_rat;
use folquot::{ChartMap, Derivation, Poly, Rat};

/// The result of a scenario step. Everything renders to a canonical string,
/// which is what reports show and what expected values are compared against.
#[derive(Debug, Clone)]
pub enum Value {
    Rat(Rat),
    Bool(bool),
    Str(String),
    Poly(Poly),
    Deriv(Derivation),
    Chart(ChartMap),
    List(Vec<Value>),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Rat(Rat::from(num::BigInt::from(n)))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Rat(_) => "rational",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Poly(_) => "poly",
            Value::Deriv(_) => "derivation",
            Value::Chart(_) => "chart",
            Value::List(_) => "list",
            Value::Record(_) => "record",
        }
    }

    pub fn render(&self) -> String {
        match self {
            Value::Rat(r) => render_rat(r),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => s.clone(),
            Value::Poly(p) => p.to_string(),
            Value::Deriv(d) => d.to_string(),
            Value::Chart(c) => c.to_string(),
            Value::List(items) => {
                let inner: Vec<String> = items.iter().map(|v| v.render()).collect();
                format!("[{}]", inner.join(", "))
            }
            Value::Record(fields) => {
                let inner: Vec<String> =
                    fields.iter().map(|(k, v)| format!("{k} = {}", v.render())).collect();
                format!("{{{}}}", inner.join("; "))
            }
        }
    }

    /// Follows a dotted field path into records.
    pub fn field(&self, path: &[&str]) -> Option<&Value> {
        let mut cur = self;
        for seg in path {
            match cur {
                Value::Record(fields) => cur = fields.get(*seg)?,
                _ => return None,
            }
        }
        Some(cur)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}
