//! Fairness errors due to causes and contexts, and the λ/γ bound checks.
//!
//! Both errors are sums of the same per-(context, cause) building block,
//! the ℓ1 distance between a context's full vector and its leave-one-out
//! vector taken over the surviving causes only. [`error_matrix`] exposes
//! that block directly.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{CauseId, ContextId, ModelError, ThreatModel};

/// Slack used when comparing a bound against λ or γ.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ThresholdError {
    #[error("threshold {name} must be a finite value >= 0, got {value}")]
    Invalid { name: &'static str, value: f64 },
}

/// ℓ1 distance between the full and leave-one-out vectors of one context,
/// over the causes that survive the removal.
fn leave_one_out_distance(model: &ThreatModel, ctx: usize, removed: usize) -> (f64, bool) {
    let full = model.vector_at(ctx);
    let restricted = model.restricted_at(ctx, removed);
    let surviving = full
        .values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != removed)
        .map(|(_, v)| *v);
    let distance = surviving
        .zip(restricted.values.iter())
        .map(|(p, q)| (p - q).abs())
        .sum();
    (distance, restricted.degenerate)
}

/// Fairness error due to `cause`: summed over every context.
pub fn causal_error(model: &ThreatModel, cause: &str) -> Result<f64, ModelError> {
    let removed = model.cause_index(cause)?;
    Ok((0..model.contexts().len())
        .map(|ctx| leave_one_out_distance(model, ctx, removed).0)
        .sum())
}

/// Fairness error due to `context`: summed over every removed cause.
pub fn contextual_error(model: &ThreatModel, context: &str) -> Result<f64, ModelError> {
    let ctx = model.context_index(context)?;
    Ok((0..model.causes().len())
        .map(|removed| leave_one_out_distance(model, ctx, removed).0)
        .sum())
}

/// Per-(context, cause) leave-one-out distances. Rows follow model context
/// order, columns model cause order.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMatrix {
    pub contexts: Vec<ContextId>,
    pub causes: Vec<CauseId>,
    pub cells: Vec<Vec<f64>>,
    pub degenerate_pairs: Vec<(ContextId, CauseId)>,
}

impl ErrorMatrix {
    pub fn get(&self, context: &str, cause: &str) -> Option<f64> {
        let row = self.contexts.iter().position(|c| c.as_str() == context)?;
        let col = self.causes.iter().position(|c| c.as_str() == cause)?;
        Some(self.cells[row][col])
    }

    /// Column sums: the causal errors, in cause order.
    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.causes.len())
            .map(|j| self.cells.iter().map(|row| row[j]).sum())
            .collect()
    }

    /// Row sums: the contextual errors, in context order.
    pub fn row_sums(&self) -> Vec<f64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn to_document(&self) -> Value {
        let rows: Vec<Value> = self
            .contexts
            .iter()
            .zip(&self.cells)
            .map(|(ctx, row)| {
                let cells: serde_json::Map<String, Value> = self
                    .causes
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), json!(v)))
                    .collect();
                json!({ "context": ctx, "cells": cells })
            })
            .collect();
        json!({
            "causes": self.causes,
            "contexts": self.contexts,
            "rows": rows,
            "degenerate_pairs": degenerate_document(&self.degenerate_pairs),
        })
    }
}

pub fn error_matrix(model: &ThreatModel) -> ErrorMatrix {
    let mut cells = Vec::with_capacity(model.contexts().len());
    let mut degenerate_pairs = Vec::new();
    for (ctx, assignment) in model.contexts().iter().enumerate() {
        let mut row = Vec::with_capacity(model.causes().len());
        for (removed, cause) in model.causes().iter().enumerate() {
            let (distance, degenerate) = leave_one_out_distance(model, ctx, removed);
            if degenerate {
                degenerate_pairs.push((assignment.id.clone(), cause.id.clone()));
            }
            row.push(distance);
        }
        cells.push(row);
    }
    ErrorMatrix {
        contexts: model.contexts().iter().map(|c| c.id.clone()).collect(),
        causes: model.causes().iter().map(|c| c.id.clone()).collect(),
        cells,
        degenerate_pairs,
    }
}

fn degenerate_document(pairs: &[(ContextId, CauseId)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(x, c)| json!({ "context": x, "cause": c }))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct FairnessReport {
    pub causal_errors: BTreeMap<CauseId, f64>,
    pub contextual_errors: BTreeMap<ContextId, f64>,
    /// Supremum of the causal errors.
    pub causal_bound: f64,
    /// Supremum of the contextual errors.
    pub contextual_bound: f64,
    pub degenerate_pairs: Vec<(ContextId, CauseId)>,
}

impl FairnessReport {
    pub fn to_document(&self) -> Value {
        json!({
            "causal_errors": self.causal_errors,
            "contextual_errors": self.contextual_errors,
            "bounds": {
                "causal": self.causal_bound,
                "contextual": self.contextual_bound,
            },
            "degenerate_pairs": degenerate_document(&self.degenerate_pairs),
        })
    }
}

pub fn fairness_report(model: &ThreatModel) -> FairnessReport {
    let matrix = error_matrix(model);
    let causal_errors: BTreeMap<_, _> = matrix
        .causes
        .iter()
        .cloned()
        .zip(matrix.column_sums())
        .collect();
    let contextual_errors: BTreeMap<_, _> = matrix
        .contexts
        .iter()
        .cloned()
        .zip(matrix.row_sums())
        .collect();
    FairnessReport {
        causal_bound: causal_errors.values().copied().fold(0.0, f64::max),
        contextual_bound: contextual_errors.values().copied().fold(0.0, f64::max),
        causal_errors,
        contextual_errors,
        degenerate_pairs: matrix.degenerate_pairs,
    }
}

fn checked_threshold(name: &'static str, value: f64) -> Result<f64, ThresholdError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(ThresholdError::Invalid { name, value })
    }
}

/// True when the largest causal error is at most `lambda`.
pub fn is_lambda_causally_fair(
    report: &FairnessReport,
    lambda: f64,
) -> Result<bool, ThresholdError> {
    let lambda = checked_threshold("lambda", lambda)?;
    Ok(report.causal_bound <= lambda + BOUND_SLACK)
}

/// True when the largest contextual error is at most `gamma`.
pub fn is_gamma_contextually_fair(
    report: &FairnessReport,
    gamma: f64,
) -> Result<bool, ThresholdError> {
    let gamma = checked_threshold("gamma", gamma)?;
    Ok(report.contextual_bound <= gamma + BOUND_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Pass,
    Fail { excess: f64 },
    Skipped,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail { .. } => "fail",
            Verdict::Skipped => "skipped",
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }
}

/// Outcome of checking a report against optional λ and γ thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub causal_bound: f64,
    pub contextual_bound: f64,
    pub causal: Verdict,
    pub contextual: Verdict,
}

impl CheckOutcome {
    pub fn all_passed(&self) -> bool {
        !self.causal.failed() && !self.contextual.failed()
    }

    pub fn to_document(&self) -> Value {
        let excess = |v: &Verdict| match v {
            Verdict::Fail { excess } => json!(excess),
            Verdict::Pass => json!(0.0),
            Verdict::Skipped => Value::Null,
        };
        json!({
            "causal": self.causal.as_str(),
            "contextual": self.contextual.as_str(),
            "excesses": {
                "causal": excess(&self.causal),
                "contextual": excess(&self.contextual),
            },
            "bounds": {
                "causal": self.causal_bound,
                "contextual": self.contextual_bound,
            },
            "thresholds": {
                "lambda": self.lambda,
                "gamma": self.gamma,
            },
        })
    }
}

/// Checks whichever of λ and γ are supplied; a missing threshold is skipped.
pub fn check(
    report: &FairnessReport,
    lambda: Option<f64>,
    gamma: Option<f64>,
) -> Result<CheckOutcome, ThresholdError> {
    let causal = match lambda {
        None => Verdict::Skipped,
        Some(l) if is_lambda_causally_fair(report, l)? => Verdict::Pass,
        Some(l) => Verdict::Fail {
            excess: report.causal_bound - l,
        },
    };
    let contextual = match gamma {
        None => Verdict::Skipped,
        Some(g) if is_gamma_contextually_fair(report, g)? => Verdict::Pass,
        Some(g) => Verdict::Fail {
            excess: report.contextual_bound - g,
        },
    };
    Ok(CheckOutcome {
        lambda,
        gamma,
        causal_bound: report.causal_bound,
        contextual_bound: report.contextual_bound,
        causal,
        contextual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{draft, password_loss};
    use crate::model::{ContextAssignment, LeaveOneOutOverride, SemanticsMode};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn causal_error_worked_example() {
        let m = ThreatModel::new(password_loss()).unwrap();
        assert!(close(causal_error(&m, "ss").unwrap(), 0.7));
        assert!(close(causal_error(&m, "ph").unwrap(), 0.8));
        assert!(close(causal_error(&m, "mw").unwrap(), 0.5));
    }

    #[test]
    fn causal_error_with_override() {
        let mut d = password_loss();
        d.overrides.push(LeaveOneOutOverride::new(
            "cafe",
            "ss",
            [("ph", 0.2), ("mw", 0.8)],
        ));
        let m = ThreatModel::new(d).unwrap();
        assert!(close(causal_error(&m, "ss").unwrap(), 0.9));
    }

    #[test]
    fn single_cause_has_no_error() {
        let m = ThreatModel::new(draft(
            SemanticsMode::Shares,
            vec![
                ContextAssignment::new("a", [("c1", 0.3)]),
                ContextAssignment::new("b", [("c1", 7.0)]),
            ],
        ))
        .unwrap();
        assert_eq!(causal_error(&m, "c1").unwrap(), 0.0);
        let r = fairness_report(&m);
        assert_eq!(r.causal_bound, 0.0);
        assert_eq!(r.contextual_bound, 0.0);
        assert!(r.degenerate_pairs.is_empty());
    }

    #[test]
    fn contextual_error_examples() {
        let m = ThreatModel::new(password_loss()).unwrap();
        assert!(close(contextual_error(&m, "office").unwrap(), 1.0));
        assert!(close(contextual_error(&m, "cafe").unwrap(), 1.0));

        let mut d = password_loss();
        d.overrides.push(LeaveOneOutOverride::new(
            "office",
            "mw",
            [("ss", 0.0), ("ph", 1.0)],
        ));
        let m = ThreatModel::new(d).unwrap();
        assert!(close(contextual_error(&m, "office").unwrap(), 1.2));

        let mut d = password_loss();
        d.mode = SemanticsMode::Conditional;
        let m = ThreatModel::new(d).unwrap();
        assert_eq!(contextual_error(&m, "office").unwrap(), 0.0);
    }

    #[test]
    fn report_on_worked_example() {
        let m = ThreatModel::new(password_loss()).unwrap();
        let r = fairness_report(&m);
        assert!(close(r.causal_errors["ss"], 0.7));
        assert!(close(r.causal_errors["ph"], 0.8));
        assert!(close(r.causal_errors["mw"], 0.5));
        assert!(close(r.causal_bound, 0.8));
        assert!(close(r.contextual_errors["office"], 1.0));
        assert!(close(r.contextual_errors["cafe"], 1.0));
        assert!(close(r.contextual_bound, 1.0));

        let matrix = error_matrix(&m);
        assert!(close(matrix.get("office", "ss").unwrap(), 0.1));
        assert!(close(matrix.get("cafe", "ss").unwrap(), 0.6));
    }

    #[test]
    fn conditional_without_overrides_is_all_zero() {
        let mut d = password_loss();
        d.mode = SemanticsMode::Conditional;
        let m = ThreatModel::new(d).unwrap();
        let matrix = error_matrix(&m);
        assert!(matrix.cells.iter().flatten().all(|&v| v == 0.0));
        let r = fairness_report(&m);
        assert_eq!(r.causal_bound, 0.0);
        assert!(is_gamma_contextually_fair(&r, 0.0).unwrap());
    }

    #[test]
    fn degenerate_restriction_contributes_surviving_values() {
        let m = ThreatModel::new(draft(
            SemanticsMode::Shares,
            vec![ContextAssignment::new("x", [("c1", 1.0), ("c2", 0.0)])],
        ))
        .unwrap();
        let r = fairness_report(&m);
        assert_eq!(
            r.degenerate_pairs,
            vec![(ContextId::from("x"), CauseId::from("c1"))]
        );
        // Removing c1 leaves c2 at 0 against an unrestricted 0: no error.
        // Removing c2 renormalizes c1 to 1: no error either.
        assert_eq!(r.causal_bound, 0.0);
    }

    #[test]
    fn threshold_checks() {
        let m = ThreatModel::new(password_loss()).unwrap();
        let mut r = fairness_report(&m);
        // Pin the bounds to the literal values used by the boundary cases.
        r.causal_bound = 0.8;
        r.contextual_bound = 1.0;
        assert!(is_lambda_causally_fair(&r, 0.8).unwrap());
        assert!(!is_lambda_causally_fair(&r, 0.79).unwrap());
        assert!(is_gamma_contextually_fair(&r, 1.0).unwrap());
        r.contextual_bound = 1.2;
        assert!(!is_gamma_contextually_fair(&r, 1.0).unwrap());
        r.causal_bound = 0.0;
        assert!(is_lambda_causally_fair(&r, 0.0).unwrap());

        assert!(is_lambda_causally_fair(&r, -1.0).is_err());
        assert!(is_gamma_contextually_fair(&r, -0.5).is_err());
        assert!(is_gamma_contextually_fair(&r, f64::NAN).is_err());
    }

    #[test]
    fn check_reports_excess_and_skips() {
        let m = ThreatModel::new(password_loss()).unwrap();
        let r = fairness_report(&m);
        let out = check(&r, Some(0.8), None).unwrap();
        assert_eq!(out.causal, Verdict::Pass);
        assert_eq!(out.contextual, Verdict::Skipped);

        let out = check(&r, Some(0.5), Some(2.0)).unwrap();
        match out.causal {
            Verdict::Fail { excess } => assert!(close(excess, 0.3)),
            other => panic!("expected failure, got {other:?}"),
        }
        assert_eq!(out.contextual, Verdict::Pass);
        assert!(!out.all_passed());
        assert!(check(&r, Some(-1.0), None).is_err());
    }
}
