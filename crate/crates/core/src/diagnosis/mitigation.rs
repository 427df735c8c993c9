use serde_json::{json, Value};
use thiserror::Error;

use crate::metrics::{
    fairness_report, is_gamma_contextually_fair, is_lambda_causally_fair, FairnessReport,
    ThresholdError,
};
use crate::model::ThreatModel;

use super::snapped;
use super::whatif::{whatif_with_report, Edit, WhatIf, WhatIfDelta};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MitigationError {
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error("max_steps must be at least 1")]
    NoSteps,
}

/// Total excess of the bounds over their targets.
pub fn objective(report: &FairnessReport, lambda: f64, gamma: f64) -> f64 {
    (report.causal_bound - lambda).max(0.0) + (report.contextual_bound - gamma).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MitigationPlan {
    pub lambda: f64,
    pub gamma: f64,
    pub steps: Vec<WhatIfDelta>,
    pub achieved: bool,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub final_causal_bound: f64,
    pub final_contextual_bound: f64,
}

impl MitigationPlan {
    pub fn removed_causes(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.edit.cause().as_str()).collect()
    }

    pub fn to_document(&self) -> Value {
        json!({
            "targets": {"lambda": self.lambda, "gamma": self.gamma},
            "steps": self.steps.iter().map(WhatIfDelta::to_document).collect::<Vec<_>>(),
            "achieved": self.achieved,
            "objective": {"initial": self.initial_objective, "final": self.final_objective},
            "final_bounds": {
                "causal": self.final_causal_bound,
                "contextual": self.final_contextual_bound,
            },
        })
    }
}

fn is_fair(report: &FairnessReport, lambda: f64, gamma: f64) -> Result<bool, ThresholdError> {
    Ok(is_lambda_causally_fair(report, lambda)? && is_gamma_contextually_fair(report, gamma)?)
}

/// Greedy single-cause removal towards λ-causal and γ-contextual fairness.
///
/// Each round tries removing every remaining cause and keeps the removal
/// with the lowest [`objective`], ties going to the smaller id. The plan
/// stops once both bounds are met, the step budget is spent, one cause is
/// left, or no valid removal strictly lowers the objective.
pub fn suggest_mitigation(
    model: &ThreatModel,
    lambda: f64,
    gamma: f64,
    max_steps: usize,
) -> Result<MitigationPlan, MitigationError> {
    if max_steps == 0 {
        return Err(MitigationError::NoSteps);
    }
    let mut current = model.clone();
    let mut report = fairness_report(&current);
    let initial_objective = objective(&report, lambda, gamma);
    let mut achieved = is_fair(&report, lambda, gamma)?;
    let mut steps = Vec::new();

    while !achieved && steps.len() < max_steps && current.causes().len() > 1 {
        let mut candidates: Vec<&str> = current.causes().iter().map(|c| c.id.as_str()).collect();
        candidates.sort_unstable();

        let mut best: Option<(f64, WhatIf)> = None;
        for cause in candidates {
            // A removal that leaves some shares-mode context without mass
            // is not a valid model and is not a candidate.
            let Ok(w) = whatif_with_report(
                &current,
                report.clone(),
                Edit::Remove {
                    cause: cause.into(),
                },
            ) else {
                continue;
            };
            let score = objective(&w.delta.after, lambda, gamma);
            if best
                .as_ref()
                .is_none_or(|(b, _)| snapped(score) < snapped(*b))
            {
                best = Some((score, w));
            }
        }
        let Some((score, w)) = best else { break };
        if snapped(score) >= snapped(objective(&report, lambda, gamma)) {
            break;
        }
        report = w.delta.after.clone();
        current = w.model;
        steps.push(w.delta);
        achieved = is_fair(&report, lambda, gamma)?;
    }

    Ok(MitigationPlan {
        lambda,
        gamma,
        steps,
        achieved,
        initial_objective,
        final_objective: objective(&report, lambda, gamma),
        final_causal_bound: report.causal_bound,
        final_contextual_bound: report.contextual_bound,
    })
}
