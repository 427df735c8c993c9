//! Canonical JSON rendering shared by model files, CLI output and the
//! HTTP service: object keys sorted, two-space indentation, trailing newline,
//! floats in shortest round-trip form.

use serde_json::{Map, Value};

fn sort_keys(value: &Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), sort_keys(&map[k]));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.iter().map(sort_keys).collect()),
        other => other.clone(),
    }
}

pub fn to_string(value: &Value) -> String {
    let mut out = serde_json::to_string_pretty(&sort_keys(value)).expect("Value always serializes");
    out.push('\n');
    out
}

/// Re-renders arbitrary JSON text canonically. Every number other than an
/// integer `schema_version` is rendered as a float, matching how model
/// values are stored.
pub fn canonicalize(text: &str) -> Result<String, serde_json::Error> {
    let value: Value = serde_json::from_str(text)?;
    Ok(to_string(&floats_everywhere(&value, true)))
}

fn floats_everywhere(value: &Value, top: bool) -> Value {
    match value {
        Value::Object(map) => Value::Object(
            map.iter()
                .map(|(k, v)| {
                    let keep = top && k == "schema_version" && v.is_u64();
                    let v = if keep {
                        v.clone()
                    } else {
                        floats_everywhere(v, false)
                    };
                    (k.clone(), v)
                })
                .collect(),
        ),
        Value::Array(items) => {
            Value::Array(items.iter().map(|v| floats_everywhere(v, false)).collect())
        }
        Value::Number(n) => n
            .as_f64()
            .and_then(serde_json::Number::from_f64)
            .map(Value::Number)
            .unwrap_or_else(|| value.clone()),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_at_every_level() {
        let v = json!({"b": 1, "a": {"z": [{"y": 1, "x": 2}], "c": null}});
        let s = to_string(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"c\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.find("\"x\"").unwrap() < s.find("\"y\"").unwrap());
        assert!(s.ends_with("}\n"));
    }

    #[test]
    fn numbers_become_floats_except_version() {
        let s = canonicalize(r#"{"schema_version": 1, "w": {"a": 1, "b": 0.25}}"#).unwrap();
        assert!(s.contains("\"schema_version\": 1,"));
        assert!(s.contains("\"a\": 1.0"));
        assert!(s.contains("\"b\": 0.25"));
    }
}
