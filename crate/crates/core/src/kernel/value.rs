use std::collections::BTreeMap;

use super::error::RuleError;
use super::ids::Ix;

/// A scalar, enum tag, reference or flat list. No nested maps.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    /// Enumerated state tag.
    Tag(&'static str),
    Ref(Ix),
    Refs(Vec<Ix>),
    Ints(Vec<i64>),
    List(Vec<Value>),
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Null => "null",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Text(_) => "text",
            Value::Tag(_) => "tag",
            Value::Ref(_) => "ref",
            Value::Refs(_) => "refs",
            Value::Ints(_) => "ints",
            Value::List(_) => "list",
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Float(v) => Some(v),
            Value::Int(v) => Some(v as f64),
            Value::Bool(b) => Some(if b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Int(v) => Some(v),
            Value::Float(v) if v.is_finite() => Some(v.round() as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            Value::Tag(s) => Some(s),
            _ => None,
        }
    }

    /// Converts a JSON value into a parameter value. Objects are rejected.
    pub fn from_json(v: &serde_json::Value) -> Option<Value> {
        Some(match v {
            serde_json::Value::Null => Value::Null,
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::Number(n) => match n.as_i64() {
                Some(i) => Value::Int(i),
                None => Value::Float(n.as_f64()?),
            },
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Array(items) => {
                Value::List(items.iter().map(Value::from_json).collect::<Option<_>>()?)
            }
            serde_json::Value::Object(_) => return None,
        })
    }
}

macro_rules! typed_getters {
    ($key:ty) => {
        pub fn get(&self, key: &str) -> Option<&Value> {
            self.0.get(key)
        }

        pub fn contains(&self, key: &str) -> bool {
            self.0.contains_key(key)
        }

        pub fn value(&self, key: &str) -> Result<&Value, RuleError> {
            self.0
                .get(key)
                .ok_or_else(|| RuleError::MissingKey(key.to_string()))
        }

        pub fn f64(&self, key: &str) -> Result<f64, RuleError> {
            let v = self.value(key)?;
            v.as_f64().ok_or_else(|| mismatch(key, "number", v))
        }

        pub fn i64(&self, key: &str) -> Result<i64, RuleError> {
            let v = self.value(key)?;
            v.as_i64().ok_or_else(|| mismatch(key, "integer", v))
        }

        pub fn bool(&self, key: &str) -> Result<bool, RuleError> {
            match self.value(key)? {
                Value::Bool(b) => Ok(*b),
                other => Err(mismatch(key, "bool", other)),
            }
        }

        pub fn str(&self, key: &str) -> Result<&str, RuleError> {
            let v = self.value(key)?;
            v.as_str().ok_or_else(|| mismatch(key, "text", v))
        }

        /// Optional reference; `Null` maps to `None`.
        pub fn opt_ref(&self, key: &str) -> Result<Option<Ix>, RuleError> {
            match self.value(key)? {
                Value::Ref(ix) => Ok(Some(*ix)),
                Value::Null => Ok(None),
                other => Err(mismatch(key, "ref", other)),
            }
        }

        pub fn refs(&self, key: &str) -> Result<&[Ix], RuleError> {
            match self.value(key)? {
                Value::Refs(v) => Ok(v),
                other => Err(mismatch(key, "refs", other)),
            }
        }

        pub fn ints(&self, key: &str) -> Result<&[i64], RuleError> {
            match self.value(key)? {
                Value::Ints(v) => Ok(v),
                other => Err(mismatch(key, "ints", other)),
            }
        }

        pub fn list(&self, key: &str) -> Result<&[Value], RuleError> {
            match self.value(key)? {
                Value::List(v) => Ok(v),
                other => Err(mismatch(key, "list", other)),
            }
        }

        pub fn iter(&self) -> impl Iterator<Item = (&$key, &Value)> {
            self.0.iter()
        }

        pub fn len(&self) -> usize {
            self.0.len()
        }

        pub fn is_empty(&self) -> bool {
            self.0.is_empty()
        }
    };
}

fn mismatch(key: &str, expected: &'static str, got: &Value) -> RuleError {
    RuleError::TypeMismatch {
        key: key.to_string(),
        expected,
        found: got.kind(),
    }
}

/// Mutable state of one subagent. Keys are fixed by the role's rules and
/// all exist from tick 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct State(BTreeMap<&'static str, Value>);

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &'static str, value: Value) -> Self {
        self.0.insert(key, value);
        self
    }

    pub fn set(&mut self, key: &'static str, value: Value) {
        self.0.insert(key, value);
    }

    /// Sets `key` and reports whether the stored value changed.
    pub fn update(&mut self, key: &'static str, value: Value) -> bool {
        match self.0.get_mut(key) {
            Some(slot) if *slot == value => false,
            Some(slot) => {
                *slot = value;
                true
            }
            None => {
                self.0.insert(key, value);
                true
            }
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.0.keys().copied()
    }

    typed_getters!(&'static str);
}

/// Parameters of one subagent. Hazards and mitigations write here by name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params(BTreeMap<String, Value>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.0.insert(key.to_string(), value);
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    typed_getters!(String);
}

impl FromIterator<(String, Value)> for Params {
    fn from_iter<T: IntoIterator<Item = (String, Value)>>(iter: T) -> Self {
        Params(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_access_reports_missing_and_mismatched_keys() {
        let s = State::new()
            .with("occupancy", Value::Int(3))
            .with("available", Value::Bool(true));
        assert_eq!(s.f64("occupancy").unwrap(), 3.0);
        assert!(s.bool("available").unwrap());
        assert!(matches!(s.f64("nope"), Err(RuleError::MissingKey(_))));
        assert!(matches!(
            s.bool("occupancy"),
            Err(RuleError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn update_detects_change() {
        let mut s = State::new().with("x", Value::Int(1));
        assert!(!s.update("x", Value::Int(1)));
        assert!(s.update("x", Value::Int(2)));
    }

    #[test]
    fn scaled_integer_parameters_round() {
        let p = Params::new().with("beds", Value::Float(4.5));
        assert_eq!(p.i64("beds").unwrap(), 5);
    }

    #[test]
    fn json_objects_are_not_parameter_values() {
        let v: serde_json::Value = serde_json::json!({"a": 1});
        assert!(Value::from_json(&v).is_none());
        let v: serde_json::Value = serde_json::json!([1, 2.5, "x"]);
        assert_eq!(
            Value::from_json(&v),
            Some(Value::List(vec![
                Value::Int(1),
                Value::Float(2.5),
                Value::Text("x".into())
            ]))
        );
    }
}
