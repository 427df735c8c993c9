//! Fairness analysis for context-aware privacy threat models.
//!
//! A threat model assigns, for every context, a value to each cause of a
//! privacy-harm outcome. Leaving one cause out of the universe changes the
//! values assigned to the others; the fairness errors measure how much,
//! per cause (summed over contexts) and per context (summed over causes).
//!
//! - [`model`]: types, validation, full and leave-one-out vectors
//! - [`metrics`]: fairness errors, error matrix, λ/γ checks
//! - [`diagnosis`]: ranking, what-if edits, greedy mitigation, FAIR risk
//! - [`io`]: the JSON model file format

pub mod canonical;
pub mod diagnosis;
pub mod io;
pub mod metrics;
pub mod model;

pub use diagnosis::{
    contextual_risk, rank, risk_report, suggest_mitigation, whatif, whatif_add, whatif_remove,
    Edit, MitigationPlan, RankKind, Ranking, RiskEntry, RiskReport, WhatIfDelta, WhatIfError,
};
pub use io::{load_model, save_model, LoadError};
pub use metrics::{
    causal_error, check, contextual_error, error_matrix, fairness_report,
    is_gamma_contextually_fair, is_lambda_causally_fair, CheckOutcome, ErrorMatrix, FairnessReport,
    ThresholdError, Verdict,
};
pub use model::{
    probability_vector, restricted_vector, validate_model, CauseId, ContextId, ModelError,
    ProbabilityVector, SemanticsMode, ThreatModel, ThreatModelDraft, ValidationReport,
};
