//! Cooperative cancellation shared between the solver and the advisor.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

/// Rows processed between two cancellation checks in long-running passes.
pub const CHECK_INTERVAL_ROWS: usize = 4096;

/// Returned by cancellable operations that observed a raised token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("operation cancelled")]
pub struct Cancelled;

/// Write-once cancellation flag with a progress counter.
///
/// Workers report progress through [`CancelToken::checkpoint`]; the
/// canceller snapshots that progress when it raises the flag, which lets
/// tests measure how much work happened after cancellation.
#[derive(Debug)]
pub struct CancelToken {
    raised: AtomicBool,
    progress: AtomicUsize,
    progress_at_raise: AtomicUsize,
    raised_at: OnceLock<Instant>,
}

impl Default for CancelToken {
    fn default() -> Self {
        Self::new()
    }
}

impl CancelToken {
    pub fn new() -> Self {
        Self {
            raised: AtomicBool::new(false),
            progress: AtomicUsize::new(0),
            progress_at_raise: AtomicUsize::new(usize::MAX),
            raised_at: OnceLock::new(),
        }
    }

    pub fn cancel(&self) {
        if self.raised.swap(true, Ordering::SeqCst) {
            return;
        }
        let _ = self.raised_at.set(Instant::now());
        self.progress_at_raise
            .store(self.progress.load(Ordering::SeqCst), Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.raised.load(Ordering::SeqCst)
    }

    /// Records `rows` more rows of work and reports whether to stop.
    pub fn checkpoint(&self, rows: usize) -> bool {
        self.progress.fetch_add(rows, Ordering::SeqCst);
        self.raised.load(Ordering::SeqCst)
    }

    /// Total rows reported through [`checkpoint`](Self::checkpoint).
    pub fn progress(&self) -> usize {
        self.progress.load(Ordering::SeqCst)
    }

    /// Rows reported after the flag was raised, if it was.
    pub fn work_after_cancel(&self) -> Option<usize> {
        let at = self.progress_at_raise.load(Ordering::SeqCst);
        if at == usize::MAX {
            return None;
        }
        Some(self.progress().saturating_sub(at))
    }

    pub fn raised_at(&self) -> Option<Instant> {
        self.raised_at.get().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn work_after_cancel_counts_only_later_checkpoints() {
        let t = CancelToken::new();
        assert!(!t.checkpoint(100));
        assert_eq!(t.work_after_cancel(), None);
        t.cancel();
        assert!(t.checkpoint(50));
        t.cancel();
        assert_eq!(t.work_after_cancel(), Some(50));
        assert!(t.raised_at().is_some());
    }
}
