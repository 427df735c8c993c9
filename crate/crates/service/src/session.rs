//! One analysis session: the served model plus the what-if edits applied
//! on top of it.

use std::collections::BTreeMap;
use std::sync::Arc;

use parking_lot::{Mutex, RwLock};
use threatfair_core::diagnosis::{whatif, Edit, WhatIfDelta, WhatIfError};
use threatfair_core::{CauseId, ContextId, ThreatModel};

/// Immutable view of the working state at one point in the edit history.
#[derive(Debug)]
pub struct Snapshot {
    pub model: ThreatModel,
    pub log: Vec<Edit>,
}

#[derive(Debug)]
pub struct Session {
    base: Arc<ThreatModel>,
    current: RwLock<Arc<Snapshot>>,
    writer: Mutex<()>,
}

impl Session {
    pub fn new(model: ThreatModel) -> Self {
        let snapshot = Snapshot {
            model: model.clone(),
            log: Vec::new(),
        };
        Self {
            base: Arc::new(model),
            current: RwLock::new(Arc::new(snapshot)),
            writer: Mutex::new(()),
        }
    }

    pub fn base(&self) -> &ThreatModel {
        &self.base
    }

    /// The current snapshot. Holding it never blocks writers.
    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.current.read().clone()
    }

    /// Applies an edit to the working model. On error nothing changes.
    pub fn apply(&self, edit: Edit) -> Result<WhatIfDelta, WhatIfError> {
        let _writer = self.writer.lock();
        let current = self.snapshot();
        let outcome = whatif(&current.model, edit)?;
        let mut log = current.log.clone();
        log.push(outcome.delta.edit.clone());
        *self.current.write() = Arc::new(Snapshot {
            model: outcome.model,
            log,
        });
        Ok(outcome.delta)
    }

    pub fn reset(&self) -> Arc<Snapshot> {
        let _writer = self.writer.lock();
        let fresh = Arc::new(Snapshot {
            model: (*self.base).clone(),
            log: Vec::new(),
        });
        *self.current.write() = fresh.clone();
        fresh
    }

    /// Weights and label a cause had in the served model, for restoring a
    /// cause that was removed earlier in the session.
    pub fn base_cause(&self, cause: &str) -> Option<(Option<String>, BTreeMap<ContextId, f64>)> {
        let index = self.base.cause_index(cause).ok()?;
        let label = self.base.causes()[index].label.clone();
        let id = CauseId::new(cause);
        let weights = self
            .base
            .contexts()
            .iter()
            .map(|c| (c.id.clone(), c.weights[&id]))
            .collect();
        Some((label, weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use threatfair_core::diagnosis::apply_edit;
    use threatfair_core::{fairness_report, load_model};

    fn fixture() -> ThreatModel {
        let path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../core/fixtures/password_loss.json"
        );
        load_model(&std::fs::read(path).unwrap()).unwrap()
    }

    #[test]
    fn apply_and_reset() {
        let session = Session::new(fixture());
        let initial = fairness_report(&session.snapshot().model);
        let delta = session.apply(Edit::Remove { cause: "mw".into() }).unwrap();
        assert_eq!(delta.before, initial);
        assert_eq!(session.snapshot().log.len(), 1);
        assert_eq!(fairness_report(&session.snapshot().model), delta.after);
        session.reset();
        assert!(session.snapshot().log.is_empty());
        assert_eq!(fairness_report(&session.snapshot().model), initial);
    }

    #[test]
    fn failed_edit_changes_nothing() {
        let session = Session::new(fixture());
        session.apply(Edit::Remove { cause: "mw".into() }).unwrap();
        session.apply(Edit::Remove { cause: "ph".into() }).unwrap();
        let before = session.snapshot();
        let err = session
            .apply(Edit::Remove { cause: "ss".into() })
            .unwrap_err();
        assert_eq!(err, WhatIfError::LastCause("ss".into()));
        assert!(Arc::ptr_eq(&before, &session.snapshot()));
    }

    #[test]
    fn log_prefixes_replay() {
        let session = Session::new(fixture());
        session.apply(Edit::Remove { cause: "mw".into() }).unwrap();
        let (label, weights) = session.base_cause("mw").unwrap();
        session
            .apply(Edit::Add {
                cause: "mw".into(),
                label,
                weights,
            })
            .unwrap();
        session.apply(Edit::Remove { cause: "ss".into() }).unwrap();
        let log = session.snapshot().log.clone();
        let mut model = session.base().clone();
        for edit in &log {
            model = apply_edit(&model, edit).unwrap();
        }
        assert_eq!(
            fairness_report(&model),
            fairness_report(&session.snapshot().model)
        );
    }

    #[test]
    fn concurrent_edits_serialize() {
        let session = Arc::new(Session::new(fixture()));
        let handles: Vec<_> = ["ss", "ph", "mw"]
            .into_iter()
            .map(|c| {
                let s = session.clone();
                std::thread::spawn(move || s.apply(Edit::Remove { cause: c.into() }).is_ok())
            })
            .collect();
        let applied = handles
            .into_iter()
            .map(|h| h.join().unwrap())
            .filter(|ok| *ok)
            .count();
        // Exactly one removal must be refused: the one that would empty χ.
        assert_eq!(applied, 2);
        let snap = session.snapshot();
        assert_eq!(snap.log.len(), 2);
        assert_eq!(snap.model.causes().len(), 1);
    }
}
