//! Threat-model types, validation and the probability vectors built from them.
//!
//! A model is assembled as a [`ThreatModelDraft`] (plain data, freely
//! editable) and becomes a [`ThreatModel`] only after every invariant has
//! been checked. A `ThreatModel` cannot be mutated; what-if edits go back
//! through a draft.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for normalization and sum checks.
pub const SUM_TOLERANCE: f64 = 1e-9;

macro_rules! id_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_newtype!(
    /// Identifier of a cause in the universe.
    CauseId
);
id_newtype!(
    /// Identifier of a context.
    ContextId
);

/// How the per-context values are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticsMode {
    /// Raw weights, normalized into contribution shares; leave-one-out
    /// restriction renormalizes proportionally.
    #[default]
    Shares,
    /// Standalone conditional probabilities; leave-one-out restriction
    /// keeps the surviving values unchanged.
    Conditional,
}

impl SemanticsMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SemanticsMode::Shares => "shares",
            SemanticsMode::Conditional => "conditional",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cause {
    pub id: CauseId,
    pub label: Option<String>,
}

impl Cause {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: CauseId::new(id),
            label: None,
        }
    }
}

/// Per-context assignment of values to every cause, plus the optional FAIR
/// risk inputs for that context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextAssignment {
    pub id: ContextId,
    pub label: Option<String>,
    pub weights: BTreeMap<CauseId, f64>,
    /// Threat events per period.
    pub threat_frequency: Option<f64>,
    /// Loss units per event.
    pub harm_magnitude: Option<f64>,
}

impl ContextAssignment {
    pub fn new<'a>(
        id: impl Into<String>,
        weights: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Self {
        Self {
            id: ContextId::new(id),
            label: None,
            weights: weights
                .into_iter()
                .map(|(k, v)| (CauseId::from(k), v))
                .collect(),
            threat_frequency: None,
            harm_magnitude: None,
        }
    }
}

/// Analyst-elicited probabilities for the universe with one cause removed.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaveOneOutOverride {
    pub context: ContextId,
    pub removed_cause: CauseId,
    pub probabilities: BTreeMap<CauseId, f64>,
}

impl LeaveOneOutOverride {
    pub fn new<'a>(
        context: &str,
        removed_cause: &str,
        probabilities: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Self {
        Self {
            context: context.into(),
            removed_cause: removed_cause.into(),
            probabilities: probabilities
                .into_iter()
                .map(|(k, v)| (CauseId::from(k), v))
                .collect(),
        }
    }

    pub fn mentions(&self, cause: &str) -> bool {
        self.removed_cause.as_str() == cause || self.probabilities.contains_key(cause)
    }
}

/// An unvalidated model. Field order of `causes` and `contexts` is the
/// model order used everywhere downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreatModelDraft {
    pub outcome: String,
    pub mode: SemanticsMode,
    pub causes: Vec<Cause>,
    pub contexts: Vec<ContextAssignment>,
    pub overrides: Vec<LeaveOneOutOverride>,
}

/// Machine-readable reason attached to a [`Violation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    NoCauses,
    NoContexts,
    EmptyId,
    IdWhitespace,
    DuplicateCause,
    DuplicateContext,
    MissingWeight,
    UnknownWeightCause,
    NegativeWeight,
    NonFiniteWeight,
    WeightAboveOne,
    AllWeightsZero,
    NegativeRiskInput,
    NonFiniteRiskInput,
    UnknownOverrideContext,
    UnknownOverrideCause,
    OverrideHasRemovedCause,
    OverrideMissingProbability,
    OverrideUnknownCause,
    OverrideProbabilityOutOfRange,
    OverrideNotNormalized,
    DuplicateOverride,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        use ViolationCode::*;
        match self {
            NoCauses => "no_causes",
            NoContexts => "no_contexts",
            EmptyId => "empty_id",
            IdWhitespace => "id_whitespace",
            DuplicateCause => "duplicate_cause",
            DuplicateContext => "duplicate_context",
            MissingWeight => "missing_weight",
            UnknownWeightCause => "unknown_weight_cause",
            NegativeWeight => "negative_weight",
            NonFiniteWeight => "non_finite_weight",
            WeightAboveOne => "weight_above_one",
            AllWeightsZero => "all_weights_zero",
            NegativeRiskInput => "negative_risk_input",
            NonFiniteRiskInput => "non_finite_risk_input",
            UnknownOverrideContext => "unknown_override_context",
            UnknownOverrideCause => "unknown_override_cause",
            OverrideHasRemovedCause => "override_has_removed_cause",
            OverrideMissingProbability => "override_missing_probability",
            OverrideUnknownCause => "override_unknown_cause",
            OverrideProbabilityOutOfRange => "override_probability_out_of_range",
            OverrideNotNormalized => "override_not_normalized",
            DuplicateOverride => "duplicate_override",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Location inside the model document, e.g. `contexts[1].weights.ph`.
    pub path: String,
    pub code: ViolationCode,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.path, self.code, self.message)
    }
}

/// Result of [`validate_model`]. Empty means the draft is valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, path: impl Into<String>, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            code,
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_id(report: &mut ValidationReport, path: String, id: &str) {
    if id.is_empty() {
        report.push(path, ViolationCode::EmptyId, "identifier is empty");
    } else if id.chars().any(char::is_whitespace) {
        report.push(
            path,
            ViolationCode::IdWhitespace,
            format!("identifier {id:?} contains whitespace"),
        );
    }
}

/// Checks every model invariant. Violations are returned as data.
pub fn validate_model(draft: &ThreatModelDraft) -> ValidationReport {
    let mut report = ValidationReport::default();

    if draft.causes.is_empty() {
        report.push(
            "causes",
            ViolationCode::NoCauses,
            "the cause universe is empty",
        );
    }
    if draft.contexts.is_empty() {
        report.push(
            "contexts",
            ViolationCode::NoContexts,
            "the context set is empty",
        );
    }

    let mut cause_ids = HashSet::new();
    for (i, cause) in draft.causes.iter().enumerate() {
        check_id(&mut report, format!("causes[{i}].id"), cause.id.as_str());
        if !cause_ids.insert(cause.id.as_str()) {
            report.push(
                format!("causes[{i}].id"),
                ViolationCode::DuplicateCause,
                format!("cause {} declared more than once", cause.id),
            );
        }
    }

    let mut context_ids = HashSet::new();
    for (i, ctx) in draft.contexts.iter().enumerate() {
        let base = format!("contexts[{i}]");
        check_id(&mut report, format!("{base}.id"), ctx.id.as_str());
        if !context_ids.insert(ctx.id.as_str()) {
            report.push(
                format!("{base}.id"),
                ViolationCode::DuplicateContext,
                format!("context {} declared more than once", ctx.id),
            );
        }

        for cause in &draft.causes {
            if !ctx.weights.contains_key(cause.id.as_str()) {
                report.push(
                    format!("{base}.weights.{}", cause.id),
                    ViolationCode::MissingWeight,
                    format!("no weight for cause {}", cause.id),
                );
            }
        }
        for (cause, &w) in &ctx.weights {
            let path = format!("{base}.weights.{cause}");
            if !cause_ids.contains(cause.as_str()) {
                report.push(
                    &path,
                    ViolationCode::UnknownWeightCause,
                    format!("{cause} is not a declared cause"),
                );
            }
            if !w.is_finite() {
                report.push(
                    &path,
                    ViolationCode::NonFiniteWeight,
                    "weight is not finite",
                );
            } else if w < 0.0 {
                report.push(
                    &path,
                    ViolationCode::NegativeWeight,
                    format!("weight {w} is negative"),
                );
            } else if draft.mode == SemanticsMode::Conditional && w > 1.0 {
                report.push(
                    &path,
                    ViolationCode::WeightAboveOne,
                    format!("probability {w} exceeds 1"),
                );
            }
        }
        if draft.mode == SemanticsMode::Shares
            && !ctx.weights.is_empty()
            && !ctx.weights.values().any(|&w| w > 0.0)
        {
            report.push(
                format!("{base}.weights"),
                ViolationCode::AllWeightsZero,
                "shares mode needs at least one positive weight",
            );
        }

        for (field, value) in [
            ("threat_frequency", ctx.threat_frequency),
            ("harm_magnitude", ctx.harm_magnitude),
        ] {
            if let Some(v) = value {
                if !v.is_finite() {
                    report.push(
                        format!("{base}.{field}"),
                        ViolationCode::NonFiniteRiskInput,
                        "value is not finite",
                    );
                } else if v < 0.0 {
                    report.push(
                        format!("{base}.{field}"),
                        ViolationCode::NegativeRiskInput,
                        format!("{v} is negative"),
                    );
                }
            }
        }
    }

    let mut seen_pairs = HashSet::new();
    for (i, o) in draft.overrides.iter().enumerate() {
        let base = format!("overrides[{i}]");
        if !context_ids.contains(o.context.as_str()) {
            report.push(
                format!("{base}.context"),
                ViolationCode::UnknownOverrideContext,
                format!("context {} does not exist", o.context),
            );
        }
        if !cause_ids.contains(o.removed_cause.as_str()) {
            report.push(
                format!("{base}.removed_cause"),
                ViolationCode::UnknownOverrideCause,
                format!("cause {} does not exist", o.removed_cause),
            );
        }
        if !seen_pairs.insert((o.context.as_str(), o.removed_cause.as_str())) {
            report.push(
                base.clone(),
                ViolationCode::DuplicateOverride,
                format!("second override for ({}, {})", o.context, o.removed_cause),
            );
        }
        if o.probabilities.contains_key(o.removed_cause.as_str()) {
            report.push(
                format!("{base}.probabilities.{}", o.removed_cause),
                ViolationCode::OverrideHasRemovedCause,
                "the removed cause cannot carry a probability",
            );
        }
        for cause in &draft.causes {
            if cause.id != o.removed_cause && !o.probabilities.contains_key(cause.id.as_str()) {
                report.push(
                    format!("{base}.probabilities.{}", cause.id),
                    ViolationCode::OverrideMissingProbability,
                    format!("no probability for cause {}", cause.id),
                );
            }
        }
        let mut all_in_range = true;
        for (cause, &p) in &o.probabilities {
            let path = format!("{base}.probabilities.{cause}");
            if !cause_ids.contains(cause.as_str()) {
                report.push(
                    &path,
                    ViolationCode::OverrideUnknownCause,
                    format!("{cause} is not a declared cause"),
                );
            }
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                all_in_range = false;
                report.push(
                    &path,
                    ViolationCode::OverrideProbabilityOutOfRange,
                    format!("{p} is outside [0, 1]"),
                );
            }
        }
        if draft.mode == SemanticsMode::Shares && all_in_range {
            let sum: f64 = o.probabilities.values().sum();
            if sum != 0.0 && (sum - 1.0).abs() > SUM_TOLERANCE {
                report.push(
                    format!("{base}.probabilities"),
                    ViolationCode::OverrideNotNormalized,
                    format!("probabilities sum to {sum}, expected 1 (or 0)"),
                );
            }
        }
    }

    report
}

/// Lookup failure against a validated model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown cause `{0}`")]
    UnknownCause(String),
    #[error("unknown context `{0}`")]
    UnknownContext(String),
}

/// A validated, immutable threat model.
#[derive(Debug, Clone)]
pub struct ThreatModel {
    draft: ThreatModelDraft,
    cause_pos: HashMap<CauseId, usize>,
    context_pos: HashMap<ContextId, usize>,
    /// (context index, removed cause index) -> index into `draft.overrides`
    override_pos: HashMap<(usize, usize), usize>,
}

impl PartialEq for ThreatModel {
    fn eq(&self, other: &Self) -> bool {
        self.draft == other.draft
    }
}

impl TryFrom<ThreatModelDraft> for ThreatModel {
    type Error = ValidationReport;

    fn try_from(draft: ThreatModelDraft) -> Result<Self, Self::Error> {
        ThreatModel::new(draft)
    }
}

impl ThreatModel {
    pub fn new(draft: ThreatModelDraft) -> Result<Self, ValidationReport> {
        let report = validate_model(&draft);
        if !report.is_ok() {
            return Err(report);
        }
        let cause_pos: HashMap<_, _> = draft
            .causes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        let context_pos: HashMap<_, _> = draft
            .contexts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        let override_pos = draft
            .overrides
            .iter()
            .enumerate()
            .map(|(i, o)| ((context_pos[&o.context], cause_pos[&o.removed_cause]), i))
            .collect();
        Ok(Self {
            draft,
            cause_pos,
            context_pos,
            override_pos,
        })
    }

    pub fn outcome(&self) -> &str {
        &self.draft.outcome
    }

    pub fn mode(&self) -> SemanticsMode {
        self.draft.mode
    }

    pub fn causes(&self) -> &[Cause] {
        &self.draft.causes
    }

    pub fn contexts(&self) -> &[ContextAssignment] {
        &self.draft.contexts
    }

    pub fn overrides(&self) -> &[LeaveOneOutOverride] {
        &self.draft.overrides
    }

    pub fn draft(&self) -> &ThreatModelDraft {
        &self.draft
    }

    pub fn into_draft(self) -> ThreatModelDraft {
        self.draft
    }

    pub fn cause_index(&self, cause: &str) -> Result<usize, ModelError> {
        self.cause_pos
            .get(cause)
            .copied()
            .ok_or_else(|| ModelError::UnknownCause(cause.to_string()))
    }

    pub fn context_index(&self, context: &str) -> Result<usize, ModelError> {
        self.context_pos
            .get(context)
            .copied()
            .ok_or_else(|| ModelError::UnknownContext(context.to_string()))
    }

    pub fn context(&self, context: &str) -> Result<&ContextAssignment, ModelError> {
        self.context_index(context).map(|i| &self.draft.contexts[i])
    }

    pub fn override_for(&self, context: usize, removed: usize) -> Option<&LeaveOneOutOverride> {
        self.override_pos
            .get(&(context, removed))
            .map(|&i| &self.draft.overrides[i])
    }

    /// Unrestricted vector for the context at `ctx` (model order).
    pub(crate) fn vector_at(&self, ctx: usize) -> ProbabilityVector {
        let assignment = &self.draft.contexts[ctx];
        let raw: Vec<f64> = self
            .draft
            .causes
            .iter()
            .map(|c| assignment.weights[&c.id])
            .collect();
        let values = match self.draft.mode {
            SemanticsMode::Conditional => raw,
            SemanticsMode::Shares => {
                let total: f64 = raw.iter().sum();
                raw.iter().map(|w| w / total).collect()
            }
        };
        ProbabilityVector {
            universe: self.draft.causes.iter().map(|c| c.id.clone()).collect(),
            values,
            degenerate: false,
        }
    }

    /// Leave-one-out vector for the context at `ctx` with cause `removed`
    /// dropped from the universe.
    pub(crate) fn restricted_at(&self, ctx: usize, removed: usize) -> ProbabilityVector {
        let universe: Vec<CauseId> = self
            .draft
            .causes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != removed)
            .map(|(_, c)| c.id.clone())
            .collect();

        if let Some(o) = self.override_for(ctx, removed) {
            let values: Vec<f64> = universe.iter().map(|c| o.probabilities[c]).collect();
            let degenerate = self.draft.mode == SemanticsMode::Shares
                && !values.is_empty()
                && values.iter().all(|&v| v == 0.0);
            return ProbabilityVector {
                universe,
                values,
                degenerate,
            };
        }

        let weights = &self.draft.contexts[ctx].weights;
        let raw: Vec<f64> = universe.iter().map(|c| weights[c]).collect();
        match self.draft.mode {
            SemanticsMode::Conditional => ProbabilityVector {
                universe,
                values: raw,
                degenerate: false,
            },
            SemanticsMode::Shares => {
                let total: f64 = raw.iter().sum();
                if total == 0.0 {
                    let degenerate = !raw.is_empty();
                    ProbabilityVector {
                        universe,
                        values: vec![0.0; raw.len()],
                        degenerate,
                    }
                } else {
                    ProbabilityVector {
                        universe,
                        values: raw.iter().map(|w| w / total).collect(),
                        degenerate: false,
                    }
                }
            }
        }
    }
}

/// Values assigned to each cause of a universe within one context.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    pub universe: Vec<CauseId>,
    pub values: Vec<f64>,
    /// Set when a shares-mode restriction left no mass; all values are 0.
    pub degenerate: bool,
}

impl ProbabilityVector {
    pub fn get(&self, cause: &str) -> Option<f64> {
        self.universe
            .iter()
            .position(|c| c.as_str() == cause)
            .map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CauseId, f64)> {
        self.universe.iter().zip(self.values.iter().copied())
    }
}

/// The vector over the full cause universe for one context.
pub fn probability_vector(
    model: &ThreatModel,
    context: &str,
) -> Result<ProbabilityVector, ModelError> {
    let ctx = model.context_index(context)?;
    Ok(model.vector_at(ctx))
}

/// The vector over the universe with `removed` left out, taken from an
/// override when one exists for the pair.
pub fn restricted_vector(
    model: &ThreatModel,
    context: &str,
    removed: &str,
) -> Result<ProbabilityVector, ModelError> {
    let ctx = model.context_index(context)?;
    let cause = model.cause_index(removed)?;
    Ok(model.restricted_at(ctx, cause))
}
