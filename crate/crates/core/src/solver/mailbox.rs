//! Hand-off between the advisor and the solver.
//!
//! The mailbox holds at most one pending update; a newer update overwrites an
//! unread one. The delay gate is only used to make swap timing deterministic
//! in tests and experiments.

use crate::kernels::SpmvConfig;
use crate::matrix::AnyMatrix;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};

/// A configuration ready to run. `matrix` is `None` when the configuration
/// runs on the original COO input.
#[derive(Debug, Clone)]
pub struct Update {
    pub config: SpmvConfig,
    pub matrix: Option<Arc<AnyMatrix>>,
    pub conversion_seconds: f64,
    /// Position of the cascade decision that produced this update.
    pub decision: usize,
}

#[derive(Debug, Default)]
pub struct ConfigMailbox {
    slot: Mutex<Option<Update>>,
    converged: AtomicBool,
}

impl ConfigMailbox {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `update`, returning the unread update it replaced.
    pub fn publish(&self, update: Update) -> Option<Update> {
        self.slot.lock().expect("mailbox poisoned").replace(update)
    }

    pub fn take(&self) -> Option<Update> {
        self.slot.lock().expect("mailbox poisoned").take()
    }

    pub fn mark_converged(&self) {
        self.converged.store(true, Ordering::SeqCst);
    }

    pub fn is_converged(&self) -> bool {
        self.converged.load(Ordering::SeqCst)
    }
}

/// When each cascade decision may be published, in solver iterations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum DelayInjection {
    /// Publish as soon as the decision is ready.
    #[default]
    None,
    /// Every decision arrives after iteration `d`.
    Uniform(usize),
    /// Decision `k` arrives after iteration `delays[k]`; decisions past the
    /// end reuse the last entry.
    PerDecision(Vec<usize>),
}

impl DelayInjection {
    fn arrival_after(&self, decision: usize) -> Option<usize> {
        match self {
            DelayInjection::None => None,
            DelayInjection::Uniform(d) => Some(*d),
            DelayInjection::PerDecision(v) => v.get(decision).or(v.last()).copied(),
        }
    }

    /// First iteration that can run under decision `decision`.
    pub fn effective_iteration(&self, decision: usize) -> Option<usize> {
        self.arrival_after(decision).map(|d| d.max(1) + 1)
    }
}

#[derive(Debug, Default)]
struct GateState {
    boundary: usize,
    released: usize,
    advisor_done: bool,
    stopped: bool,
}

/// Lines decisions up with iteration boundaries. The advisor waits until the
/// solver reaches a decision's boundary; the solver waits at that boundary
/// until the decision is released or the advisor finishes.
#[derive(Debug)]
pub struct DelayGate {
    schedule: DelayInjection,
    state: Mutex<GateState>,
    changed: Condvar,
}

impl DelayGate {
    pub fn new(schedule: DelayInjection) -> Self {
        Self {
            schedule,
            state: Mutex::new(GateState::default()),
            changed: Condvar::new(),
        }
    }

    pub fn is_active(&self) -> bool {
        self.schedule != DelayInjection::None
    }

    /// Advisor side: blocks until decision `decision` may be published.
    /// Returns `false` if the solver has stopped.
    pub fn wait_for_release(&self, decision: usize) -> bool {
        let Some(at) = self.schedule.effective_iteration(decision) else {
            return true;
        };
        let guard = self.state.lock().expect("gate poisoned");
        let state = self
            .changed
            .wait_while(guard, |s| !s.stopped && s.boundary < at)
            .expect("gate poisoned");
        !state.stopped
    }

    /// Advisor side: marks decision `decision` as handled (published or
    /// skipped).
    pub fn release(&self, decision: usize) {
        let mut s = self.state.lock().expect("gate poisoned");
        s.released = s.released.max(decision + 1);
        self.changed.notify_all();
    }

    pub fn advisor_finished(&self) {
        self.state.lock().expect("gate poisoned").advisor_done = true;
        self.changed.notify_all();
    }

    /// Solver side: announces boundary `iteration` and waits for every
    /// decision due by then.
    pub fn reach_boundary(&self, iteration: usize) {
        if !self.is_active() {
            return;
        }
        let mut guard = self.state.lock().expect("gate poisoned");
        guard.boundary = iteration;
        self.changed.notify_all();
        let schedule = &self.schedule;
        let _state = self
            .changed
            .wait_while(guard, |s| {
                !s.advisor_done
                    && schedule
                        .effective_iteration(s.released)
                        .is_some_and(|at| at <= iteration)
            })
            .expect("gate poisoned");
    }

    /// Solver side: no more boundaries will be reached.
    pub fn stop(&self) {
        self.state.lock().expect("gate poisoned").stopped = true;
        self.changed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(decision: usize) -> Update {
        Update {
            config: SpmvConfig::DEFAULT,
            matrix: None,
            conversion_seconds: 0.0,
            decision,
        }
    }

    #[test]
    fn last_writer_wins() {
        let mb = ConfigMailbox::new();
        assert!(mb.publish(update(0)).is_none());
        assert_eq!(mb.publish(update(1)).map(|u| u.decision), Some(0));
        assert_eq!(mb.take().map(|u| u.decision), Some(1));
        assert!(mb.take().is_none());
    }

    #[test]
    fn effective_iterations() {
        let u = DelayInjection::Uniform(0);
        assert_eq!(u.effective_iteration(5), Some(2));
        let p = DelayInjection::PerDecision(vec![3, 7]);
        assert_eq!(p.effective_iteration(0), Some(4));
        assert_eq!(p.effective_iteration(1), Some(8));
        assert_eq!(p.effective_iteration(2), Some(8));
        assert_eq!(DelayInjection::None.effective_iteration(0), None);
    }

    #[test]
    fn gate_orders_release_and_boundary() {
        let gate = DelayGate::new(DelayInjection::Uniform(2));
        let mb = ConfigMailbox::new();
        std::thread::scope(|s| {
            s.spawn(|| {
                assert!(gate.wait_for_release(0));
                mb.publish(update(0));
                gate.release(0);
                gate.advisor_finished();
            });
            gate.reach_boundary(2);
            assert!(mb.take().is_none());
            gate.reach_boundary(3);
            assert_eq!(mb.take().map(|u| u.decision), Some(0));
            gate.stop();
        });
    }
}
