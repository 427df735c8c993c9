//! Ranking, what-if edits, greedy mitigation and context-conditioned risk.

mod mitigation;
mod risk;
mod whatif;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::metrics::{fairness_report, FairnessReport};
use crate::model::ThreatModel;

pub use mitigation::{objective, suggest_mitigation, MitigationError, MitigationPlan};
pub use risk::{contextual_risk, risk_report, RiskEntry, RiskError, RiskReport, SkippedContext};
pub use whatif::{
    add_cause, apply_edit, remove_cause, whatif, whatif_add, whatif_remove, Edit, WhatIf,
    WhatIfDelta, WhatIfError,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankKind {
    Cause,
    Context,
}

impl fmt::Display for RankKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKind::Cause => "cause",
            RankKind::Context => "context",
        })
    }
}

/// Ids ordered from most to least unfair.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub kind: RankKind,
    pub entries: Vec<(String, f64)>,
}

impl Ranking {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn to_document(&self) -> Value {
        json!({
            "kind": self.kind,
            "entries": self
                .entries
                .iter()
                .map(|(id, error)| json!({"id": id, "error": error}))
                .collect::<Vec<_>>(),
        })
    }
}

/// Ordering key for computed values: differences below 1e-12 are rounding
/// noise and compare equal.
pub(crate) fn snapped(x: f64) -> f64 {
    (x * 1e12).round()
}

/// Descending by value, then ascending by id.
pub(crate) fn descending_then_id(a: &(String, f64), b: &(String, f64)) -> Ordering {
    snapped(b.1)
        .total_cmp(&snapped(a.1))
        .then_with(|| a.0.cmp(&b.0))
}

pub fn rank_report(report: &FairnessReport, kind: RankKind) -> Ranking {
    let mut entries: Vec<(String, f64)> = match kind {
        RankKind::Cause => report
            .causal_errors
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
        RankKind::Context => report
            .contextual_errors
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect(),
    };
    entries.sort_by(descending_then_id);
    Ranking { kind, entries }
}

pub fn rank(model: &ThreatModel, kind: RankKind) -> Ranking {
    rank_report(&fairness_report(model), kind)
}
