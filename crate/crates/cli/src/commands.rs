use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::json;
use threatfair_core::diagnosis::{risk_report, Edit, WhatIfError};
use threatfair_core::{
    check as check_bounds, fairness_report, io, rank as rank_model, suggest_mitigation,
    whatif as apply_whatif, ContextId, LoadError, RankKind, ThreatModel, Verdict,
};

use crate::output::{num, print_json, rows, Format};

pub const EXIT_OK: u8 = 0;
pub const EXIT_UNFAIR: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

fn usage(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    EXIT_USAGE
}

fn report_load_error(path: &Path, err: &LoadError) -> u8 {
    eprintln!("{}: {err}", path.display());
    EXIT_INVALID
}

/// Reads and validates a model, or returns the exit code to stop with.
fn load(path: &Path) -> Result<ThreatModel, u8> {
    let bytes = fs::read(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        EXIT_IO
    })?;
    io::load_model(&bytes).map_err(|e| report_load_error(path, &e))
}

pub fn validate(path: &Path, format: Format) -> u8 {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return EXIT_IO;
        }
    };
    match io::load_model(&bytes) {
        Ok(_) => {
            match format {
                Format::Table => println!("OK"),
                Format::Json => print_json(&json!({"valid": true})),
            }
            EXIT_OK
        }
        Err(err) => {
            match format {
                Format::Json => {
                    let mut doc = err.to_document();
                    doc["valid"] = json!(false);
                    print_json(&doc);
                }
                Format::Table => match &err {
                    LoadError::Validation(report) => {
                        for v in &report.violations {
                            println!("{}\t{}\t{}", v.path, v.code, v.message);
                        }
                    }
                    other => println!("{other}"),
                },
            }
            EXIT_INVALID
        }
    }
}

pub fn analyze(path: &Path, format: Format) -> u8 {
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let report = fairness_report(&model);
    match format {
        Format::Json => print_json(&report.to_document()),
        Format::Table => {
            println!(
                "outcome: {} ({} mode)",
                model.outcome(),
                model.mode().as_str()
            );
            println!("fairness error due to each cause:");
            print!(
                "{}",
                rows(
                    model
                        .causes()
                        .iter()
                        .map(|c| (c.id.as_str(), num(report.causal_errors[&c.id])))
                )
            );
            println!("fairness error due to each context:");
            print!(
                "{}",
                rows(
                    model
                        .contexts()
                        .iter()
                        .map(|x| (x.id.as_str(), num(report.contextual_errors[&x.id])))
                )
            );
            println!("causal bound: {}", num(report.causal_bound));
            println!("contextual bound: {}", num(report.contextual_bound));
            for (x, c) in &report.degenerate_pairs {
                println!("warning: removing {c} leaves no mass in context {x}; restricted vector is all zero");
            }
        }
    }
    EXIT_OK
}

pub fn rank(path: &Path, format: Format, kind: RankKind) -> u8 {
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let ranking = rank_model(&model, kind);
    match format {
        Format::Json => print_json(&ranking.to_document()),
        Format::Table => {
            for (id, error) in &ranking.entries {
                println!("{id} {}", num(*error));
            }
        }
    }
    EXIT_OK
}

pub fn check(path: &Path, format: Format, lambda: Option<f64>, gamma: Option<f64>) -> u8 {
    for (name, value) in [("lambda", lambda), ("gamma", gamma)] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return usage(format!("--{name} must be a finite value >= 0, got {v}"));
            }
        }
    }
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let report = fairness_report(&model);
    let outcome = match check_bounds(&report, lambda, gamma) {
        Ok(o) => o,
        Err(e) => return usage(e),
    };
    match format {
        Format::Json => print_json(&outcome.to_document()),
        Format::Table => {
            let line = |kind: &str,
                        symbol: &str,
                        threshold: Option<f64>,
                        bound: f64,
                        verdict: &Verdict| match verdict {
                Verdict::Skipped => println!("{kind}: skipped"),
                Verdict::Pass => println!(
                    "{kind}: PASS (bound {} <= {symbol} {})",
                    num(bound),
                    num(threshold.unwrap_or_default())
                ),
                Verdict::Fail { excess } => println!(
                    "{kind}: FAIL (bound {} > {symbol} {}, excess {})",
                    num(bound),
                    num(threshold.unwrap_or_default()),
                    num(*excess)
                ),
            };
            line(
                "causal",
                "lambda",
                lambda,
                outcome.causal_bound,
                &outcome.causal,
            );
            line(
                "contextual",
                "gamma",
                gamma,
                outcome.contextual_bound,
                &outcome.contextual,
            );
        }
    }
    if outcome.all_passed() {
        EXIT_OK
    } else {
        EXIT_UNFAIR
    }
}

fn parse_weights(arg: &str) -> Result<BTreeMap<ContextId, f64>, String> {
    let mut out = BTreeMap::new();
    for pair in arg.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| format!("expected CONTEXT=WEIGHT, got `{pair}`"))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("weight for `{}` is not a number: `{v}`", k.trim()))?;
        if out.insert(ContextId::new(k.trim()), value).is_some() {
            return Err(format!("context `{}` given twice", k.trim()));
        }
    }
    Ok(out)
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

pub fn whatif(
    path: &Path,
    format: Format,
    remove: Option<String>,
    add: Option<String>,
    weights: Option<String>,
    save: Option<PathBuf>,
) -> u8 {
    let edit = match (remove, add) {
        (Some(cause), None) => Edit::Remove {
            cause: cause.into(),
        },
        (None, Some(cause)) => match parse_weights(weights.as_deref().unwrap_or_default()) {
            Ok(weights) => Edit::Add {
                cause: cause.into(),
                label: None,
                weights,
            },
            Err(e) => return usage(e),
        },
        _ => return usage("exactly one of --remove or --add is required"),
    };
    if let Some(target) = &save {
        if same_file(target, path) {
            return usage("--save must name a new path, not the input model");
        }
    }
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let outcome = match apply_whatif(&model, edit) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("what-if refused: {e}");
            if let WhatIfError::Invalid(report) = &e {
                for v in &report.violations {
                    eprintln!("  {}\t{}\t{}", v.path, v.code, v.message);
                }
            }
            return EXIT_INVALID;
        }
    };
    let delta = &outcome.delta;
    match format {
        Format::Json => print_json(&delta.to_document()),
        Format::Table => {
            match &delta.edit {
                Edit::Remove { cause } => println!("edit: remove {cause}"),
                Edit::Add { cause, .. } => println!("edit: add {cause}"),
            }
            println!(
                "causal bound: {} -> {} (delta {})",
                num(delta.before.causal_bound),
                num(delta.after.causal_bound),
                num(delta.causal_bound_delta)
            );
            println!(
                "contextual bound: {} -> {} (delta {})",
                num(delta.before.contextual_bound),
                num(delta.after.contextual_bound),
                num(delta.contextual_bound_delta)
            );
            println!("fairness error due to each cause after the edit:");
            print!(
                "{}",
                rows(
                    outcome
                        .model
                        .causes()
                        .iter()
                        .map(|c| (c.id.as_str(), num(delta.after.causal_errors[&c.id])))
                )
            );
        }
    }
    if let Some(target) = save {
        if let Err(e) = fs::write(&target, io::save_model(&outcome.model)) {
            eprintln!("{}: {e}", target.display());
            return EXIT_IO;
        }
        eprintln!("edited model written to {}", target.display());
    }
    EXIT_OK
}

pub fn mitigate(path: &Path, format: Format, lambda: f64, gamma: f64, max_steps: usize) -> u8 {
    if max_steps == 0 {
        return usage("--max-steps must be at least 1");
    }
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let plan = match suggest_mitigation(&model, lambda, gamma, max_steps) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    match format {
        Format::Json => print_json(&plan.to_document()),
        Format::Table => {
            if plan.steps.is_empty() {
                println!("no removal lowers the excess over the targets");
            }
            for (i, step) in plan.steps.iter().enumerate() {
                println!(
                    "step {}: remove {} (causal bound {}, contextual bound {})",
                    i + 1,
                    step.edit.cause(),
                    num(step.after.causal_bound),
                    num(step.after.contextual_bound)
                );
            }
            println!(
                "final bounds: causal {}, contextual {}",
                num(plan.final_causal_bound),
                num(plan.final_contextual_bound)
            );
            println!("targets {}", if plan.achieved { "met" } else { "not met" });
        }
    }
    if plan.achieved {
        EXIT_OK
    } else {
        EXIT_UNFAIR
    }
}

pub fn risk(path: &Path, format: Format) -> u8 {
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let report = risk_report(&model);
    match format {
        Format::Json => print_json(&report.to_document()),
        Format::Table => {
            for e in &report.entries {
                println!(
                    "{} {}  (frequency {} x magnitude {})",
                    e.context,
                    num(e.risk),
                    num(e.threat_frequency),
                    num(e.harm_magnitude)
                );
            }
            for s in &report.skipped {
                println!(
                    "skipped {}: {} ({})",
                    s.context,
                    s.reason,
                    s.missing.join(", ")
                );
            }
        }
    }
    EXIT_OK
}

pub fn serve(path: &Path, bind: &str, port: u16, cors: Option<String>) -> u8 {
    let model = match load(path) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let cors = match cors.map(|o| o.parse()) {
        None => None,
        Some(Ok(origin)) => Some(origin),
        Some(Err(_)) => return usage("--cors is not a valid origin"),
    };
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();

    let runtime = match tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
    {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("cannot start runtime: {e}");
            return EXIT_IO;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind((bind, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cannot bind {bind}:{port}: {e}");
                return EXIT_IO;
            }
        };
        match listener.local_addr() {
            Ok(addr) => eprintln!("listening on http://{addr}"),
            Err(e) => {
                eprintln!("{e}");
                return EXIT_IO;
            }
        }
        let session = Arc::new(threatfair_service::Session::new(model));
        let app = threatfair_service::router(session, cors);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match threatfair_service::serve(listener, app, shutdown).await {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("server error: {e}");
                EXIT_IO
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::parse_weights;

    #[test]
    fn weights_argument() {
        let w = parse_weights("office=0.2, cafe=5").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w["cafe"], 5.0);
        assert!(parse_weights("office").is_err());
        assert!(parse_weights("office=x").is_err());
        assert!(parse_weights("office=1,office=2").is_err());
    }
}
