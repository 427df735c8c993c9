use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

const CAUSE_POOL: &[&str] = &[
    "ss", "ph", "mw", "sk", "ins", "leak", "dump", "wifi", "reuse", "bribe",
];
const CONTEXT_POOL: &[&str] = &["office", "cafe", "home", "train", "airport", "library"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeChoice {
    Shares,
    Conditional,
    Mixed,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub min_causes: usize,
    pub max_causes: usize,
    pub max_contexts: usize,
    pub mode: ModeChoice,
    /// Chance that a given (context, cause) pair gets an override.
    pub override_rate: f64,
    /// Chance that a weight is exactly zero.
    pub zero_rate: f64,
    /// Chance that an individual context carries risk inputs.
    pub risk_rate: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            min_causes: 1,
            max_causes: 5,
            max_contexts: 4,
            mode: ModeChoice::Mixed,
            override_rate: 0.2,
            zero_rate: 0.15,
            risk_rate: 0.5,
        }
    }
}

impl GenConfig {
    /// Shares mode, no overrides, strictly positive weights, at least two causes.
    pub fn closed_form() -> Self {
        Self {
            min_causes: 2,
            mode: ModeChoice::Shares,
            override_rate: 0.0,
            zero_rate: 0.0,
            ..Self::default()
        }
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builds a random, valid model document (schema v1).
pub fn random_model<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Value {
    let n_causes = rng.gen_range(cfg.min_causes.max(1)..=cfg.max_causes);
    let n_contexts = rng.gen_range(1..=cfg.max_contexts);

    let mut causes: Vec<&str> = CAUSE_POOL.to_vec();
    causes.shuffle(rng);
    causes.truncate(n_causes);
    let mut contexts: Vec<&str> = CONTEXT_POOL.to_vec();
    contexts.shuffle(rng);
    contexts.truncate(n_contexts);

    let conditional = match cfg.mode {
        ModeChoice::Shares => false,
        ModeChoice::Conditional => true,
        ModeChoice::Mixed => rng.gen_bool(0.5),
    };

    let mut context_docs = Vec::new();
    for ctx in &contexts {
        let mut weights = Map::new();
        for c in &causes {
            let w = if rng.gen_bool(cfg.zero_rate) {
                0.0
            } else if conditional {
                rng.gen_range(0.0..=1.0)
            } else {
                rng.gen_range(0.01..10.0)
            };
            weights.insert(c.to_string(), json!(w));
        }
        if !conditional && weights.values().all(|v| v.as_f64() == Some(0.0)) {
            let pick = causes[rng.gen_range(0..causes.len())];
            weights.insert(pick.to_string(), json!(rng.gen_range(0.01..10.0)));
        }
        let mut doc = Map::new();
        doc.insert("id".into(), json!(ctx));
        doc.insert("weights".into(), Value::Object(weights));
        if rng.gen_bool(cfg.risk_rate) {
            doc.insert("threat_frequency".into(), json!(rng.gen_range(0.0..5.0)));
        }
        if rng.gen_bool(cfg.risk_rate) {
            doc.insert("harm_magnitude".into(), json!(rng.gen_range(0.0..1000.0)));
        }
        context_docs.push(Value::Object(doc));
    }

    let mut overrides = Vec::new();
    if causes.len() >= 2 && cfg.override_rate > 0.0 {
        for ctx in &contexts {
            for removed in &causes {
                if !rng.gen_bool(cfg.override_rate) {
                    continue;
                }
                let survivors: Vec<&str> =
                    causes.iter().copied().filter(|c| c != removed).collect();
                let values: Vec<f64> = if conditional {
                    survivors.iter().map(|_| rng.gen_range(0.0..=1.0)).collect()
                } else if rng.gen_bool(0.1) {
                    vec![0.0; survivors.len()]
                } else {
                    let raw: Vec<f64> =
                        survivors.iter().map(|_| rng.gen_range(0.01..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    raw.iter().map(|v| v / total).collect()
                };
                let probabilities: Map<String, Value> = survivors
                    .iter()
                    .zip(values)
                    .map(|(c, v)| (c.to_string(), json!(v)))
                    .collect();
                overrides.push(json!({
                    "context": ctx,
                    "removed_cause": removed,
                    "probabilities": probabilities,
                }));
            }
        }
    }

    json!({
        "schema_version": 1,
        "outcome": "random outcome",
        "mode": if conditional { "conditional" } else { "shares" },
        "causes": causes.iter().map(|c| json!({"id": c})).collect::<Vec<_>>(),
        "contexts": context_docs,
        "overrides": overrides,
    })
}

/// Multiplies every weight of one context by `k`.
pub fn scale_context(doc: &Value, context_index: usize, k: f64) -> Value {
    let mut out = doc.clone();
    let weights = out["contexts"][context_index]["weights"]
        .as_object_mut()
        .expect("weights object");
    for v in weights.values_mut() {
        *v = json!(v.as_f64().unwrap() * k);
    }
    out
}

/// Reorders the cause declaration list.
pub fn permute_causes<R: Rng>(doc: &Value, rng: &mut R) -> Value {
    let mut out = doc.clone();
    out["causes"]
        .as_array_mut()
        .expect("causes array")
        .shuffle(rng);
    out
}
