//! Loading versioned JSON configs.
//!
//! A config file is the JSON form of the matching library config plus
//! `"schema": 1`. A summary written by an earlier run is accepted as well;
//! its embedded config is used.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_VERSION: u64 = 1;

pub fn read(path: &Path) -> Result<Value, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{} is not valid JSON: {e}", path.display()))
}

fn check_schema(obj: &Map<String, Value>) -> Result<(), String> {
    match obj.get("schema") {
        Some(Value::Number(n)) if n.as_u64() == Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(format!(
            "unsupported schema version {v}, expected {SCHEMA_VERSION}"
        )),
        None => Err(format!(
            "missing field `schema` (expected {SCHEMA_VERSION})"
        )),
    }
}

/// Parse a config (or the config inside a summary), checking the schema
/// version first.
pub fn parse<T: DeserializeOwned>(value: Value) -> Result<T, String> {
    let Value::Object(mut obj) = value else {
        return Err("a config must be a JSON object".into());
    };
    check_schema(&obj)?;
    let inner = if obj.contains_key("verdicts") {
        obj.remove("config")
            .ok_or("summary has no `config` field")?
    } else {
        obj.remove("schema");
        Value::Object(obj)
    };
    serde_json::from_value(inner).map_err(|e| format!("invalid config: {e}"))
}

/// Parse a config type that carries its own `schema` field.
pub fn parse_versioned<T: DeserializeOwned>(value: Value) -> Result<T, String> {
    let Value::Object(obj) = value else {
        return Err("a config must be a JSON object".into());
    };
    check_schema(&obj)?;
    serde_json::from_value(Value::Object(obj)).map_err(|e| format!("invalid config: {e}"))
}

/// A config as it would be written to a file.
pub fn to_file_json<T: Serialize>(cfg: &T) -> String {
    let mut v = serde_json::to_value(cfg).expect("configs serialize");
    if let Value::Object(obj) = &mut v {
        if !obj.contains_key("schema") {
            obj.insert("schema".into(), SCHEMA_VERSION.into());
        }
    }
    serde_json::to_string_pretty(&v).expect("values serialize")
}
