//! On-disk model schema (version 1) and strict load/save.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::canonical;
use crate::model::{
    Cause, CauseId, ContextAssignment, ContextId, LeaveOneOutOverride, SemanticsMode, ThreatModel,
    ThreatModelDraft, ValidationReport,
};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("parse_error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema_error: {message}")]
    Schema {
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },
    #[error("validation_error:\n{0}")]
    Validation(ValidationReport),
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::Parse { .. } => "parse_error",
            LoadError::Schema { .. } => "schema_error",
            LoadError::Validation(_) => "validation_error",
        }
    }

    pub fn to_document(&self) -> Value {
        match self {
            LoadError::Parse {
                line,
                column,
                message,
            } => json!({"error": self.code(), "line": line, "column": column, "message": message}),
            LoadError::Schema {
                message,
                line,
                column,
            } => json!({"error": self.code(), "line": line, "column": column, "message": message}),
            LoadError::Validation(report) => {
                json!({"error": self.code(), "violations": report.violations})
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    schema_version: u64,
    outcome: String,
    mode: SemanticsMode,
    causes: Vec<CauseDocument>,
    contexts: Vec<ContextDocument>,
    #[serde(default)]
    overrides: Vec<OverrideDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CauseDocument {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextDocument {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    #[serde(deserialize_with = "unique_keys")]
    weights: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    threat_frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    harm_magnitude: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideDocument {
    context: String,
    removed_cause: String,
    #[serde(deserialize_with = "unique_keys")]
    probabilities: BTreeMap<String, f64>,
}

/// Number map that refuses repeated keys instead of keeping the last one.
fn unique_keys<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
    struct UniqueKeys;

    impl<'de> Visitor<'de> for UniqueKeys {
        type Value = BTreeMap<String, f64>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an object of numbers with distinct keys")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = access.next_entry::<String, f64>()? {
                if out.contains_key(&k) {
                    return Err(de::Error::custom(format!("duplicate key `{k}`")));
                }
                out.insert(k, v);
            }
            Ok(out)
        }
    }

    d.deserialize_map(UniqueKeys)
}

impl From<ModelDocument> for ThreatModelDraft {
    fn from(doc: ModelDocument) -> Self {
        let ids = |m: BTreeMap<String, f64>| -> BTreeMap<CauseId, f64> {
            m.into_iter().map(|(k, v)| (CauseId::from(k), v)).collect()
        };
        ThreatModelDraft {
            outcome: doc.outcome,
            mode: doc.mode,
            causes: doc
                .causes
                .into_iter()
                .map(|c| Cause {
                    id: CauseId::from(c.id),
                    label: c.label,
                })
                .collect(),
            contexts: doc
                .contexts
                .into_iter()
                .map(|c| ContextAssignment {
                    id: ContextId::from(c.id),
                    label: c.label,
                    weights: ids(c.weights),
                    threat_frequency: c.threat_frequency,
                    harm_magnitude: c.harm_magnitude,
                })
                .collect(),
            overrides: doc
                .overrides
                .into_iter()
                .map(|o| LeaveOneOutOverride {
                    context: ContextId::from(o.context),
                    removed_cause: CauseId::from(o.removed_cause),
                    probabilities: ids(o.probabilities),
                })
                .collect(),
        }
    }
}

fn document_of(draft: &ThreatModelDraft) -> ModelDocument {
    let names = |m: &BTreeMap<CauseId, f64>| -> BTreeMap<String, f64> {
        m.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    };
    ModelDocument {
        schema_version: SCHEMA_VERSION,
        outcome: draft.outcome.clone(),
        mode: draft.mode,
        causes: draft
            .causes
            .iter()
            .map(|c| CauseDocument {
                id: c.id.to_string(),
                label: c.label.clone(),
            })
            .collect(),
        contexts: draft
            .contexts
            .iter()
            .map(|c| ContextDocument {
                id: c.id.to_string(),
                label: c.label.clone(),
                weights: names(&c.weights),
                threat_frequency: c.threat_frequency,
                harm_magnitude: c.harm_magnitude,
            })
            .collect(),
        overrides: draft
            .overrides
            .iter()
            .map(|o| OverrideDocument {
                context: o.context.to_string(),
                removed_cause: o.removed_cause.to_string(),
                probabilities: names(&o.probabilities),
            })
            .collect(),
    }
}

/// Parses a draft without running model validation.
pub fn parse_draft(bytes: &[u8]) -> Result<ThreatModelDraft, LoadError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let prefix = &bytes[..e.valid_up_to()];
        let line = prefix.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = prefix.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
        LoadError::Parse {
            line,
            column,
            message: "document is not valid UTF-8".into(),
        }
    })?;

    let value: Value = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let Some(top) = value.as_object() else {
        return Err(LoadError::Schema {
            message: "top level must be an object".into(),
            line: None,
            column: None,
        });
    };
    match top.get("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(LoadError::Schema {
                message: format!("unsupported schema_version {v}"),
                line: None,
                column: None,
            })
        }
        None => {
            return Err(LoadError::Schema {
                message: "missing schema_version".into(),
                line: None,
                column: None,
            })
        }
    }

    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| LoadError::Schema {
        message: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    Ok(doc.into())
}

/// Parses and validates a model document.
pub fn load_model(bytes: &[u8]) -> Result<ThreatModel, LoadError> {
    let draft = parse_draft(bytes)?;
    ThreatModel::new(draft).map_err(LoadError::Validation)
}

/// The model as a JSON value in the on-disk schema.
pub fn model_document(model: &ThreatModel) -> Value {
    serde_json::to_value(document_of(model.draft())).expect("model document serializes")
}

/// Canonical serialization of a model.
pub fn save_model(model: &ThreatModel) -> Vec<u8> {
    canonical::to_string(&model_document(model)).into_bytes()
}
