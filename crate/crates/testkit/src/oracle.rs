//! Brute-force evaluation of the fairness errors.
//!
//! Every vector pair is materialized explicitly and the absolute differences
//! are summed term by term, one loop per summation sign.

use std::collections::BTreeMap;

use serde_json::Value;

#[derive(Debug, Clone)]
pub struct Oracle {
    conditional: bool,
    causes: Vec<String>,
    contexts: Vec<String>,
    /// weights[context][cause]
    weights: Vec<BTreeMap<String, f64>>,
    /// (context, removed) -> probabilities over the survivors
    overrides: BTreeMap<(String, String), BTreeMap<String, f64>>,
}

impl Oracle {
    pub fn from_document(doc: &Value) -> Self {
        let conditional = doc["mode"].as_str() == Some("conditional");
        let causes = doc["causes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["id"].as_str().unwrap().to_string())
            .collect();
        let mut contexts = Vec::new();
        let mut weights = Vec::new();
        for ctx in doc["contexts"].as_array().unwrap() {
            contexts.push(ctx["id"].as_str().unwrap().to_string());
            weights.push(number_map(&ctx["weights"]));
        }
        let mut overrides = BTreeMap::new();
        if let Some(list) = doc["overrides"].as_array() {
            for o in list {
                overrides.insert(
                    (
                        o["context"].as_str().unwrap().to_string(),
                        o["removed_cause"].as_str().unwrap().to_string(),
                    ),
                    number_map(&o["probabilities"]),
                );
            }
        }
        Self {
            conditional,
            causes,
            contexts,
            weights,
            overrides,
        }
    }

    pub fn causes(&self) -> &[String] {
        &self.causes
    }

    pub fn contexts(&self) -> &[String] {
        &self.contexts
    }

    /// Pr[O | X, c, chi] for every c in chi.
    pub fn full_vector(&self, context: &str) -> BTreeMap<String, f64> {
        let w = &self.weights[self.context_pos(context)];
        if self.conditional {
            return w.clone();
        }
        let total: f64 = self.causes.iter().map(|c| w[c]).sum();
        self.causes
            .iter()
            .map(|c| (c.clone(), w[c] / total))
            .collect()
    }

    /// Pr[O | X, c', chi \ {removed}] for every c' != removed.
    pub fn restricted_vector(&self, context: &str, removed: &str) -> BTreeMap<String, f64> {
        if let Some(p) = self
            .overrides
            .get(&(context.to_string(), removed.to_string()))
        {
            return p.clone();
        }
        let w = &self.weights[self.context_pos(context)];
        let survivors: Vec<&String> = self.causes.iter().filter(|c| *c != removed).collect();
        if self.conditional {
            return survivors.iter().map(|c| ((*c).clone(), w[*c])).collect();
        }
        let total: f64 = survivors.iter().map(|c| w[*c]).sum();
        survivors
            .iter()
            .map(|c| {
                let v = if total == 0.0 { 0.0 } else { w[*c] / total };
                ((*c).clone(), v)
            })
            .collect()
    }

    /// The fairness error due to a cause: sum over contexts, then over the
    /// surviving causes.
    pub fn causal_error(&self, cause: &str) -> f64 {
        let mut total = 0.0;
        for x in &self.contexts {
            let full = self.full_vector(x);
            let restricted = self.restricted_vector(x, cause);
            for c_prime in &self.causes {
                if c_prime == cause {
                    continue;
                }
                total += (full[c_prime] - restricted[c_prime]).abs();
            }
        }
        total
    }

    /// The fairness error due to a context: sum over removed causes, then
    /// over the surviving causes.
    pub fn contextual_error(&self, context: &str) -> f64 {
        let full = self.full_vector(context);
        let mut total = 0.0;
        for c in &self.causes {
            let restricted = self.restricted_vector(context, c);
            for c_prime in &self.causes {
                if c_prime == c {
                    continue;
                }
                total += (full[c_prime] - restricted[c_prime]).abs();
            }
        }
        total
    }

    pub fn matrix_entry(&self, context: &str, cause: &str) -> f64 {
        let full = self.full_vector(context);
        let restricted = self.restricted_vector(context, cause);
        let mut total = 0.0;
        for c_prime in &self.causes {
            if c_prime != cause {
                total += (full[c_prime] - restricted[c_prime]).abs();
            }
        }
        total
    }

    pub fn causal_bound(&self) -> f64 {
        self.causes
            .iter()
            .map(|c| self.causal_error(c))
            .fold(0.0, f64::max)
    }

    pub fn contextual_bound(&self) -> f64 {
        self.contexts
            .iter()
            .map(|x| self.contextual_error(x))
            .fold(0.0, f64::max)
    }

    /// max(causal - lambda, 0) + max(contextual - gamma, 0)
    pub fn objective(&self, lambda: f64, gamma: f64) -> f64 {
        (self.causal_bound() - lambda).max(0.0) + (self.contextual_bound() - gamma).max(0.0)
    }

    /// Removes a cause everywhere, dropping every override that names it.
    pub fn without_cause(&self, cause: &str) -> Self {
        let mut next = self.clone();
        next.causes.retain(|c| c != cause);
        for w in &mut next.weights {
            w.remove(cause);
        }
        next.overrides
            .retain(|(_, removed), p| removed != cause && !p.contains_key(cause));
        next
    }

    /// Best objective reachable by removing at most `max_steps` causes
    /// (never emptying the universe), over every removal sequence.
    pub fn exhaustive_optimum(
        &self,
        lambda: f64,
        gamma: f64,
        max_steps: usize,
    ) -> (f64, Vec<String>) {
        let mut best = (self.objective(lambda, gamma), Vec::new());
        if max_steps == 0 || self.causes.len() <= 1 {
            return best;
        }
        for c in &self.causes {
            let next = self.without_cause(c);
            if !next.is_valid() {
                continue;
            }
            let (obj, mut seq) = next.exhaustive_optimum(lambda, gamma, max_steps - 1);
            if obj < best.0 {
                seq.insert(0, c.clone());
                best = (obj, seq);
            }
        }
        best
    }

    /// Shares mode needs some positive weight in every context.
    pub fn is_valid(&self) -> bool {
        self.conditional || self.weights.iter().all(|w| w.values().any(|&v| v > 0.0))
    }

    fn context_pos(&self, context: &str) -> usize {
        self.contexts
            .iter()
            .position(|x| x == context)
            .unwrap_or_else(|| panic!("unknown context {context}"))
    }
}

fn number_map(v: &Value) -> BTreeMap<String, f64> {
    v.as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_f64().unwrap()))
        .collect()
}
