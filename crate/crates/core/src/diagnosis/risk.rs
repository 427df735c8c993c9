use serde_json::{json, Value};
use thiserror::Error;

use crate::model::{ContextId, ModelError, ThreatModel};

use super::descending_then_id;

/// Context-conditioned FAIR risk: frequency times magnitude within one
/// context.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskEntry {
    pub context: ContextId,
    pub threat_frequency: f64,
    pub harm_magnitude: f64,
    pub risk: f64,
}

impl RiskEntry {
    pub fn to_document(&self) -> Value {
        json!({
            "context": self.context,
            "threat_frequency": self.threat_frequency,
            "harm_magnitude": self.harm_magnitude,
            "risk": self.risk,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("risk_inputs_missing: context `{context}` lacks {}", missing.join(" and "))]
    InputsMissing {
        context: String,
        missing: Vec<&'static str>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn contextual_risk(model: &ThreatModel, context: &str) -> Result<RiskEntry, RiskError> {
    let assignment = model.context(context)?;
    match (assignment.threat_frequency, assignment.harm_magnitude) {
        (Some(frequency), Some(magnitude)) => Ok(RiskEntry {
            context: assignment.id.clone(),
            threat_frequency: frequency,
            harm_magnitude: magnitude,
            risk: frequency * magnitude,
        }),
        (frequency, magnitude) => {
            let mut missing = Vec::new();
            if frequency.is_none() {
                missing.push("threat_frequency");
            }
            if magnitude.is_none() {
                missing.push("harm_magnitude");
            }
            Err(RiskError::InputsMissing {
                context: context.to_string(),
                missing,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedContext {
    pub context: ContextId,
    pub reason: &'static str,
    pub missing: Vec<&'static str>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiskReport {
    /// Descending by risk, ties by context id.
    pub entries: Vec<RiskEntry>,
    pub skipped: Vec<SkippedContext>,
}

impl RiskReport {
    pub fn to_document(&self) -> Value {
        json!({
            "entries": self.entries.iter().map(RiskEntry::to_document).collect::<Vec<_>>(),
            "skipped": self
                .skipped
                .iter()
                .map(|s| json!({"context": s.context, "reason": s.reason, "missing": s.missing}))
                .collect::<Vec<_>>(),
        })
    }
}

pub fn risk_report(model: &ThreatModel) -> RiskReport {
    let mut report = RiskReport::default();
    for ctx in model.contexts() {
        match contextual_risk(model, ctx.id.as_str()) {
            Ok(entry) => report.entries.push(entry),
            Err(RiskError::InputsMissing { missing, .. }) => report.skipped.push(SkippedContext {
                context: ctx.id.clone(),
                reason: "risk_inputs_missing",
                missing,
            }),
            Err(RiskError::Model(e)) => unreachable!("context taken from the model: {e}"),
        }
    }
    report.entries.sort_by(|a, b| {
        descending_then_id(
            &(a.context.to_string(), a.risk),
            &(b.context.to_string(), b.risk),
        )
    });
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::password_loss;

    fn with_risk(inputs: [(Option<f64>, Option<f64>); 2]) -> ThreatModel {
        let mut d = password_loss();
        for (ctx, (f, m)) in d.contexts.iter_mut().zip(inputs) {
            ctx.threat_frequency = f;
            ctx.harm_magnitude = m;
        }
        ThreatModel::new(d).unwrap()
    }

    #[test]
    fn product_of_inputs() {
        let m = with_risk([(Some(0.5), Some(10.0)), (Some(0.2), Some(50.0))]);
        let e = contextual_risk(&m, "cafe").unwrap();
        assert_eq!(e.risk, 10.0);
        let e = contextual_risk(&m, "office").unwrap();
        assert_eq!(e.risk, 5.0);

        let m = with_risk([(Some(0.0), Some(10.0)), (None, None)]);
        assert_eq!(contextual_risk(&m, "office").unwrap().risk, 0.0);
    }

    #[test]
    fn missing_inputs() {
        let m = with_risk([(Some(0.5), None), (None, None)]);
        assert_eq!(
            contextual_risk(&m, "office").unwrap_err(),
            RiskError::InputsMissing {
                context: "office".into(),
                missing: vec!["harm_magnitude"]
            }
        );
        assert!(contextual_risk(&m, "cafe")
            .unwrap_err()
            .to_string()
            .starts_with("risk_inputs_missing"));
        assert!(matches!(
            contextual_risk(&m, "park"),
            Err(RiskError::Model(_))
        ));
    }

    #[test]
    fn report_sorts_and_skips() {
        let m = with_risk([(Some(0.5), Some(10.0)), (Some(0.2), Some(50.0))]);
        let r = risk_report(&m);
        let order: Vec<_> = r
            .entries
            .iter()
            .map(|e| (e.context.as_str(), e.risk))
            .collect();
        assert_eq!(order, vec![("cafe", 10.0), ("office", 5.0)]);
        assert!(r.skipped.is_empty());

        let r = risk_report(&with_risk([(None, None), (None, Some(1.0))]));
        assert!(r.entries.is_empty());
        assert_eq!(r.skipped.len(), 2);

        let r = risk_report(&with_risk([(Some(1.0), Some(5.0)), (Some(5.0), Some(1.0))]));
        let order: Vec<_> = r.entries.iter().map(|e| e.context.as_str()).collect();
        assert_eq!(order, vec!["cafe", "office"]);
    }
}
