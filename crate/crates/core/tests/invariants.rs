use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::Value;
use threatfair_core::diagnosis::{add_cause, remove_cause};
use threatfair_core::{
    fairness_report, is_gamma_contextually_fair, is_lambda_causally_fair, load_model,
    probability_vector, restricted_vector, ContextId, FairnessReport, SemanticsMode, ThreatModel,
};
use threatfair_testkit::generate::{permute_causes, scale_context};
use threatfair_testkit::{random_model, seeded_rng, GenConfig, ModeChoice, Oracle};

fn model_of(doc: &Value) -> ThreatModel {
    load_model(&serde_json::to_vec(doc).unwrap()).unwrap()
}

fn assert_same_errors(a: &FairnessReport, b: &FairnessReport, tol: f64) {
    for (k, v) in &a.causal_errors {
        assert!(
            (v - b.causal_errors[k]).abs() <= tol,
            "cause {k}: {v} vs {}",
            b.causal_errors[k]
        );
    }
    for (k, v) in &a.contextual_errors {
        assert!(
            (v - b.contextual_errors[k]).abs() <= tol,
            "context {k}: {v} vs {}",
            b.contextual_errors[k]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_identities(seed in any::<u64>()) {
        let doc = random_model(&mut seeded_rng(seed), &GenConfig::closed_form());
        let model = model_of(&doc);
        let report = fairness_report(&model);
        for cause in model.causes() {
            let shares: f64 = model
                .contexts()
                .iter()
                .map(|x| probability_vector(&model, x.id.as_str()).unwrap().get(cause.id.as_str()).unwrap())
                .sum();
            prop_assert!((report.causal_errors[&cause.id] - shares).abs() < 1e-9);
        }
        for v in report.contextual_errors.values() {
            prop_assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shares_scale_invariance(seed in any::<u64>(), k in prop::sample::select(vec![1e-6, 0.37, 3.0, 1e6])) {
        let cfg = GenConfig { mode: ModeChoice::Shares, ..GenConfig::default() };
        let mut rng = seeded_rng(seed);
        let doc = random_model(&mut rng, &cfg);
        let n = doc["contexts"].as_array().unwrap().len();
        let scaled_doc = scale_context(&doc, seed as usize % n, k);
        let (a, b) = (model_of(&doc), model_of(&scaled_doc));
        for x in a.contexts() {
            let (va, vb) = (probability_vector(&a, x.id.as_str()).unwrap(), probability_vector(&b, x.id.as_str()).unwrap());
            for (p, q) in va.values.iter().zip(&vb.values) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
            for c in a.causes() {
                let ra = restricted_vector(&a, x.id.as_str(), c.id.as_str()).unwrap();
                let rb = restricted_vector(&b, x.id.as_str(), c.id.as_str()).unwrap();
                prop_assert_eq!(ra.degenerate, rb.degenerate);
                for (p, q) in ra.values.iter().zip(&rb.values) {
                    prop_assert!((p - q).abs() <= 1e-12);
                }
            }
        }
        assert_same_errors(&fairness_report(&a), &fairness_report(&b), 1e-12);
    }

    #[test]
    fn cause_order_permutation(seed in any::<u64>()) {
        let mut rng = seeded_rng(seed);
        let doc = random_model(&mut rng, &GenConfig::default());
        let permuted = permute_causes(&doc, &mut rng);
        let (a, b) = (model_of(&doc), model_of(&permuted));
        prop_assert_eq!(a.causes().len(), b.causes().len());
        for x in a.contexts() {
            let va = probability_vector(&a, x.id.as_str()).unwrap();
            let vb = probability_vector(&b, x.id.as_str()).unwrap();
            for (c, p) in va.iter() {
                prop_assert!((p - vb.get(c.as_str()).unwrap()).abs() <= 1e-12);
            }
        }
        assert_same_errors(&fairness_report(&a), &fairness_report(&b), 1e-12);
    }

    #[test]
    fn verdicts_are_monotone(seed in any::<u64>(), t1 in 0.0f64..25.0, dt in 0.0f64..5.0) {
        let report = fairness_report(&model_of(&random_model(&mut seeded_rng(seed), &GenConfig::default())));
        if is_lambda_causally_fair(&report, t1).unwrap() {
            prop_assert!(is_lambda_causally_fair(&report, t1 + dt).unwrap());
        }
        if is_gamma_contextually_fair(&report, t1).unwrap() {
            prop_assert!(is_gamma_contextually_fair(&report, t1 + dt).unwrap());
        }
        prop_assert!(is_lambda_causally_fair(&report, report.causal_bound).unwrap());
        prop_assert!(is_gamma_contextually_fair(&report, report.contextual_bound).unwrap());
    }

    #[test]
    fn errors_are_bounded(seed in any::<u64>()) {
        let cfg = GenConfig { override_rate: 0.7, ..GenConfig::default() };
        let model = model_of(&random_model(&mut seeded_rng(seed), &cfg));
        let n = model.causes().len() as f64;
        let m = model.contexts().len() as f64;
        let report = fairness_report(&model);
        for v in report.causal_errors.values() {
            prop_assert!(v.is_finite() && *v >= 0.0 && *v <= (n - 1.0) * m + 1e-9);
        }
        for v in report.contextual_errors.values() {
            prop_assert!(v.is_finite() && *v >= 0.0 && *v <= n * (n - 1.0) + 1e-9);
        }
        prop_assert_eq!(report.causal_bound, report.causal_errors.values().copied().fold(0.0, f64::max));
        prop_assert_eq!(report.contextual_bound, report.contextual_errors.values().copied().fold(0.0, f64::max));
    }

    #[test]
    fn restricted_shares_sum_to_one(seed in any::<u64>()) {
        let cfg = GenConfig { override_rate: 0.0, zero_rate: 0.0, mode: ModeChoice::Shares, min_causes: 2, ..GenConfig::default() };
        let model = model_of(&random_model(&mut seeded_rng(seed), &cfg));
        for x in model.contexts() {
            for c in model.causes() {
                let v = restricted_vector(&model, x.id.as_str(), c.id.as_str()).unwrap();
                prop_assert!((v.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conditional_restriction_is_identity(seed in any::<u64>()) {
        let cfg = GenConfig { override_rate: 0.0, mode: ModeChoice::Conditional, ..GenConfig::default() };
        let model = model_of(&random_model(&mut seeded_rng(seed), &cfg));
        for x in model.contexts() {
            let full = probability_vector(&model, x.id.as_str()).unwrap();
            for c in model.causes() {
                let r = restricted_vector(&model, x.id.as_str(), c.id.as_str()).unwrap();
                for (id, v) in r.iter() {
                    prop_assert_eq!(v, full.get(id.as_str()).unwrap());
                }
            }
        }
        let report = fairness_report(&model);
        prop_assert_eq!(report.causal_bound, 0.0);
        prop_assert_eq!(report.contextual_bound, 0.0);
    }

    #[test]
    fn remove_then_add_restores(seed in any::<u64>()) {
        let cfg = GenConfig { override_rate: 0.0, mode: ModeChoice::Shares, min_causes: 2, ..GenConfig::default() };
        let doc = random_model(&mut seeded_rng(seed), &cfg);
        let model = model_of(&doc);
        let target = model.causes()[seed as usize % model.causes().len()].id.clone();
        let weights: BTreeMap<ContextId, f64> =
            model.contexts().iter().map(|x| (x.id.clone(), x.weights[&target])).collect();
        let removed = remove_cause(&model, target.as_str());
        prop_assume!(removed.is_ok(), "removal would leave a context without mass");
        let removed = removed.unwrap();
        let restored = add_cause(&removed, target.as_str(), None, &weights).unwrap();
        assert_same_errors(&fairness_report(&model), &fairness_report(&restored), 1e-9);
    }

    #[test]
    fn zero_weight_addition_is_inert(seed in any::<u64>()) {
        let cfg = GenConfig { mode: ModeChoice::Shares, ..GenConfig::default() };
        let doc = random_model(&mut seeded_rng(seed), &cfg);
        let model = model_of(&doc);
        let weights: BTreeMap<ContextId, f64> = model.contexts().iter().map(|x| (x.id.clone(), 0.0)).collect();
        let added = add_cause(&model, "inert", None, &weights).unwrap();
        let (before, after) = (fairness_report(&model), fairness_report(&added));
        assert_same_errors(&before, &after, 1e-9);
        prop_assert!(after.causal_errors["inert"].abs() < 1e-9);
        // The oracle, run on the edited model, agrees.
        let oracle = Oracle::from_document(&threatfair_core::io::model_document(&added));
        prop_assert!((oracle.causal_bound() - after.causal_bound).abs() < 1e-9);
    }

    #[test]
    fn save_load_round_trip(seed in any::<u64>()) {
        let cfg = GenConfig { override_rate: 0.4, ..GenConfig::default() };
        let model = model_of(&random_model(&mut seeded_rng(seed), &cfg));
        let saved = threatfair_core::save_model(&model);
        let reloaded = load_model(&saved).unwrap();
        prop_assert_eq!(&reloaded, &model);
        prop_assert_eq!(threatfair_core::save_model(&reloaded), saved);
        prop_assert_eq!(fairness_report(&reloaded), fairness_report(&model));
    }

    #[test]
    fn computation_is_deterministic(seed in any::<u64>()) {
        let doc = random_model(&mut seeded_rng(seed), &GenConfig::default());
        let (a, b) = (fairness_report(&model_of(&doc)), fairness_report(&model_of(&doc)));
        for (k, v) in &a.causal_errors {
            prop_assert_eq!(v.to_bits(), b.causal_errors[k].to_bits());
        }
        prop_assert_eq!(a, b);
    }
}

#[test]
fn conditional_fixture_reads_as_conditional() {
    let bytes = std::fs::read(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/password_loss_conditional.json"
    ))
    .unwrap();
    assert_eq!(
        load_model(&bytes).unwrap().mode(),
        SemanticsMode::Conditional
    );
}
