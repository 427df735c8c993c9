use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::metrics::{fairness_report, FairnessReport};
use crate::model::{Cause, CauseId, ContextId, SemanticsMode, ThreatModel, ValidationReport};

/// A structural edit of the cause universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    Remove {
        cause: CauseId,
    },
    Add {
        cause: CauseId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        weights: BTreeMap<ContextId, f64>,
    },
}

impl Edit {
    pub fn cause(&self) -> &CauseId {
        match self {
            Edit::Remove { cause } | Edit::Add { cause, .. } => cause,
        }
    }

    pub fn to_document(&self) -> Value {
        serde_json::to_value(self).expect("edit serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WhatIfError {
    #[error("unknown cause `{0}`")]
    UnknownCause(String),
    #[error("cannot remove `{0}`: it is the last cause in the universe")]
    LastCause(String),
    #[error("cause `{0}` already exists")]
    DuplicateCause(String),
    #[error("no weight given for context `{0}`")]
    MissingContextWeight(String),
    #[error("weight given for unknown context `{0}`")]
    UnknownContext(String),
    #[error("edited model is invalid:\n{0}")]
    Invalid(ValidationReport),
}

/// The model universe without `cause`. Overrides naming the cause in any
/// position are dropped.
pub fn remove_cause(model: &ThreatModel, cause: &str) -> Result<ThreatModel, WhatIfError> {
    if model.cause_index(cause).is_err() {
        return Err(WhatIfError::UnknownCause(cause.to_string()));
    }
    if model.causes().len() == 1 {
        return Err(WhatIfError::LastCause(cause.to_string()));
    }
    let mut draft = model.draft().clone();
    draft.causes.retain(|c| c.id.as_str() != cause);
    for ctx in &mut draft.contexts {
        ctx.weights.remove(cause);
    }
    draft.overrides.retain(|o| !o.mentions(cause));
    ThreatModel::new(draft).map_err(WhatIfError::Invalid)
}

/// The model universe with a new cause appended.
///
/// Existing overrides gain an entry for the new cause using the mode's
/// default restriction: conditional mode copies the new cause's value;
/// shares mode gives it its renormalized share of the restricted universe
/// and scales the elicited entries by the remaining mass, so an override
/// that matched proportional renormalization still does. All-zero
/// overrides stay all-zero.
pub fn add_cause(
    model: &ThreatModel,
    cause: &str,
    label: Option<String>,
    weights: &BTreeMap<ContextId, f64>,
) -> Result<ThreatModel, WhatIfError> {
    if model.cause_index(cause).is_ok() {
        return Err(WhatIfError::DuplicateCause(cause.to_string()));
    }
    if let Some(unknown) = weights
        .keys()
        .find(|k| model.context_index(k.as_str()).is_err())
    {
        return Err(WhatIfError::UnknownContext(unknown.to_string()));
    }
    if let Some(missing) = model
        .contexts()
        .iter()
        .find(|c| !weights.contains_key(&c.id))
    {
        return Err(WhatIfError::MissingContextWeight(missing.id.to_string()));
    }

    let new_id = CauseId::new(cause);
    let mut draft = model.draft().clone();
    draft.causes.push(Cause {
        id: new_id.clone(),
        label,
    });
    for ctx in &mut draft.contexts {
        ctx.weights.insert(new_id.clone(), weights[&ctx.id]);
    }
    for o in &mut draft.overrides {
        let w = &draft
            .contexts
            .iter()
            .find(|c| c.id == o.context)
            .expect("validated override context")
            .weights;
        let added = match draft.mode {
            SemanticsMode::Conditional => w[&new_id],
            SemanticsMode::Shares => {
                let elicited: f64 = o.probabilities.values().sum();
                let residual: f64 = w
                    .iter()
                    .filter(|(c, _)| **c != o.removed_cause)
                    .map(|(_, v)| v)
                    .sum();
                let share = if elicited == 0.0 || residual == 0.0 {
                    0.0
                } else {
                    w[&new_id] / residual
                };
                for p in o.probabilities.values_mut() {
                    *p *= 1.0 - share;
                }
                share
            }
        };
        o.probabilities.insert(new_id.clone(), added);
    }
    ThreatModel::new(draft).map_err(WhatIfError::Invalid)
}

pub fn apply_edit(model: &ThreatModel, edit: &Edit) -> Result<ThreatModel, WhatIfError> {
    match edit {
        Edit::Remove { cause } => remove_cause(model, cause.as_str()),
        Edit::Add {
            cause,
            label,
            weights,
        } => add_cause(model, cause.as_str(), label.clone(), weights),
    }
}

/// Before/after fairness reports around one edit.
#[derive(Debug, Clone, PartialEq)]
pub struct WhatIfDelta {
    pub edit: Edit,
    pub before: FairnessReport,
    pub after: FairnessReport,
    pub causal_bound_delta: f64,
    pub contextual_bound_delta: f64,
}

impl WhatIfDelta {
    pub fn to_document(&self) -> Value {
        json!({
            "edit": self.edit.to_document(),
            "before": self.before.to_document(),
            "after": self.after.to_document(),
            "bound_deltas": {
                "causal": self.causal_bound_delta,
                "contextual": self.contextual_bound_delta,
            },
        })
    }
}

/// The edited model together with the delta it produced.
#[derive(Debug, Clone)]
pub struct WhatIf {
    pub model: ThreatModel,
    pub delta: WhatIfDelta,
}

pub(crate) fn whatif_with_report(
    model: &ThreatModel,
    before: FairnessReport,
    edit: Edit,
) -> Result<WhatIf, WhatIfError> {
    let edited = apply_edit(model, &edit)?;
    let after = fairness_report(&edited);
    Ok(WhatIf {
        model: edited,
        delta: WhatIfDelta {
            causal_bound_delta: after.causal_bound - before.causal_bound,
            contextual_bound_delta: after.contextual_bound - before.contextual_bound,
            edit,
            before,
            after,
        },
    })
}

pub fn whatif(model: &ThreatModel, edit: Edit) -> Result<WhatIf, WhatIfError> {
    whatif_with_report(model, fairness_report(model), edit)
}

pub fn whatif_remove(model: &ThreatModel, cause: &str) -> Result<WhatIf, WhatIfError> {
    whatif(
        model,
        Edit::Remove {
            cause: cause.into(),
        },
    )
}

pub fn whatif_add(
    model: &ThreatModel,
    cause: &str,
    weights: BTreeMap<ContextId, f64>,
) -> Result<WhatIf, WhatIfError> {
    whatif(
        model,
        Edit::Add {
            cause: cause.into(),
            label: None,
            weights,
        },
    )
}
