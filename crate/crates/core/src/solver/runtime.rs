//! Solve drivers: fixed configuration, predict-then-solve, and
//! predict-while-solve with boundary swaps.

use super::gmres::{gmres_solve, GmresParams, SolveError, SpmvExecutor, StaticExecutor, Swap};
use super::mailbox::{ConfigMailbox, DelayGate, DelayInjection, Update};
use super::report::{AdvisorOutcome, AdvisorStats, DecisionRecord, PhaseTiming, SolveMode, SolveReport};
use crate::cancel::{CancelToken, Cancelled};
use crate::features::extract_features;
use crate::inference::{cascade_predict, cascade_predict_cancellable, CascadeDecision, CascadeModelSet, Classifier};
use crate::kernels::{default_workers, KernelFn, KernelRegistry, SpmvConfig};
use crate::matrix::{convert, AnyMatrix, CooMatrix, CsrMatrix, FormatTag, MatrixError, MatrixView};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub workers: usize,
    pub delay: DelayInjection,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            workers: default_workers(),
            delay: DelayInjection::None,
        }
    }
}

impl SolveOptions {
    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers,
            delay: DelayInjection::None,
        }
    }

    pub fn with_delay(mut self, delay: DelayInjection) -> Self {
        self.delay = delay;
        self
    }
}

fn phase(name: &str, seconds: f64) -> PhaseTiming {
    PhaseTiming {
        phase: name.to_string(),
        seconds,
    }
}

fn record(d: &CascadeDecision) -> DecisionRecord {
    DecisionRecord {
        model: d.model.file_stem().to_string(),
        config: d.config,
        is_terminal: d.is_terminal,
        seconds: d.elapsed.as_secs_f64(),
    }
}

/// Storage for `format`; `None` means the COO input itself.
fn prepare(
    m: &CooMatrix,
    csr: Option<&Arc<AnyMatrix>>,
    format: FormatTag,
) -> Result<Option<Arc<AnyMatrix>>, MatrixError> {
    match (format, csr) {
        (FormatTag::Coo, _) => Ok(None),
        (FormatTag::Csr, Some(csr)) => Ok(Some(Arc::clone(csr))),
        (f, _) => convert(m, f).map(|a| Some(Arc::new(a))),
    }
}

fn view<'a>(m: &'a CooMatrix, converted: &'a Option<Arc<AnyMatrix>>) -> MatrixView<'a> {
    converted.as_deref().map_or(MatrixView::Coo(m), AnyMatrix::view)
}

/// Solves under `config` for the whole run.
pub fn fixed_solve(
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    config: SpmvConfig,
    workers: usize,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let converted = prepare(m, None, config.format())?;
    let conversion = start.elapsed().as_secs_f64();
    let solve_start = Instant::now();
    let exec = StaticExecutor::new(config, view(m, &converted), workers)?;
    let outcome = gmres_solve(b, params, exec)?;
    let solve = solve_start.elapsed().as_secs_f64();
    let mut report = SolveReport::from_outcome(SolveMode::Default, params, m.nrows(), m.nnz(), workers, outcome);
    report.phases = vec![phase("conversion", conversion), phase("solve", solve)];
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Solves under the default configuration.
pub fn default_solve(
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    workers: usize,
) -> Result<SolveReport, SolveError> {
    fixed_solve(m, b, params, SpmvConfig::DEFAULT, workers)
}

/// Extracts features, runs the full cascade, converts, then solves under the
/// predicted configuration. A prediction the matrix cannot be stored in
/// falls back to the default configuration.
pub fn sequential_predict_solve<M: Classifier>(
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    models: &CascadeModelSet<M>,
    workers: usize,
) -> Result<SolveReport, SolveError> {
    params.validate()?;
    let start = Instant::now();
    let csr = CsrMatrix::from_coo(m);
    let features = extract_features(&csr, &CancelToken::new()).expect("fresh token is never cancelled");
    let feature_seconds = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut decisions = Vec::new();
    let predicted = cascade_predict(models, &features, |d| decisions.push(record(&d)));
    let inference_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let csr = Arc::new(AnyMatrix::Csr(csr));
    let (config, converted, outcome) = match prepare(m, Some(&csr), predicted.format()) {
        Ok(c) => (predicted, c, AdvisorOutcome::Completed),
        Err(e) => {
            log::warn!("predicted {predicted} is inapplicable ({e}); solving under {}", SpmvConfig::DEFAULT);
            (
                SpmvConfig::DEFAULT,
                None,
                AdvisorOutcome::Failed { reason: e.to_string() },
            )
        }
    };
    drop(csr);
    let conversion_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let exec = StaticExecutor::new(config, view(m, &converted), workers)?;
    let gmres = gmres_solve(b, params, exec)?;
    let solve_seconds = t.elapsed().as_secs_f64();

    let mut report = SolveReport::from_outcome(SolveMode::Sequential, params, m.nrows(), m.nnz(), workers, gmres);
    report.advisor_outcome = outcome;
    report.advisor = Some(AdvisorStats {
        feature_seconds,
        inference_seconds,
        conversion_seconds,
        published: 1,
        decisions,
        ..Default::default()
    });
    report.phases = vec![
        phase("features", feature_seconds),
        phase("inference", inference_seconds),
        phase("conversion", conversion_seconds),
        phase("solve", solve_seconds),
    ];
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Executor that picks up advisor updates at iteration boundaries.
struct SwappingExecutor<'a> {
    base: &'a CooMatrix,
    active: Option<Arc<AnyMatrix>>,
    config: SpmvConfig,
    kernel: KernelFn,
    workers: usize,
    mailbox: &'a ConfigMailbox,
    gate: &'a DelayGate,
    iteration: usize,
    steps: Vec<(usize, SpmvConfig)>,
}

impl SpmvExecutor for SwappingExecutor<'_> {
    fn nrows(&self) -> usize {
        self.base.nrows()
    }
    fn ncols(&self) -> usize {
        self.base.ncols()
    }
    fn config(&self) -> SpmvConfig {
        self.config
    }
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.steps.push((self.iteration, self.config));
        (self.kernel)(view(self.base, &self.active), x, y, self.workers);
    }
    fn at_boundary(&mut self, iteration: usize) -> Option<Swap> {
        self.iteration = iteration;
        self.gate.reach_boundary(iteration);
        let update = self.mailbox.take()?;
        if update.config == self.config {
            return None;
        }
        let start = Instant::now();
        let kernel = KernelRegistry::global().resolve(update.config).ok()?;
        let format = update.matrix.as_deref().map_or(FormatTag::Coo, AnyMatrix::format);
        if format != update.config.format() {
            log::error!("update for {} carries {format} storage; ignored", update.config);
            return None;
        }
        self.kernel = kernel;
        self.active = update.matrix;
        self.config = update.config;
        Some(Swap {
            config: update.config,
            cost_seconds: update.conversion_seconds + start.elapsed().as_secs_f64(),
        })
    }
}

enum AdvisorEnd {
    Finished,
    Cancelled,
    Failed(String),
}

struct Advice {
    end: AdvisorEnd,
    stats: AdvisorStats,
    exited: Instant,
}

struct FinishOnDrop<'a>(&'a DelayGate);

impl Drop for FinishOnDrop<'_> {
    fn drop(&mut self) {
        self.0.advisor_finished();
    }
}

fn advise<M: Classifier>(
    m: &CooMatrix,
    models: &CascadeModelSet<M>,
    cancel: &CancelToken,
    mailbox: &ConfigMailbox,
    gate: &DelayGate,
) -> Advice {
    let _finish = FinishOnDrop(gate);
    let mut stats = AdvisorStats::default();
    let end = run_advisor(m, models, cancel, mailbox, gate, &mut stats);
    Advice {
        end,
        stats,
        exited: Instant::now(),
    }
}

fn run_advisor<M: Classifier>(
    m: &CooMatrix,
    models: &CascadeModelSet<M>,
    cancel: &CancelToken,
    mailbox: &ConfigMailbox,
    gate: &DelayGate,
    stats: &mut AdvisorStats,
) -> AdvisorEnd {
    let start = Instant::now();
    let Ok(csr) = CsrMatrix::from_coo_cancellable(m, cancel) else {
        return AdvisorEnd::Cancelled;
    };
    let Ok(features) = extract_features(&csr, cancel) else {
        return AdvisorEnd::Cancelled;
    };
    stats.feature_seconds = start.elapsed().as_secs_f64();
    let csr = Arc::new(AnyMatrix::Csr(csr));

    let mut current = SpmvConfig::DEFAULT;
    let mut failure = None;
    let mut interrupted = false;
    let mut index = 0;
    let result = cascade_predict_cancellable(models, &features, cancel, |d| {
        let decision = index;
        index += 1;
        stats.inference_seconds += d.elapsed.as_secs_f64();
        stats.decisions.push(record(&d));
        if cancel.is_cancelled() {
            interrupted = true;
        }
        if failure.is_some() || interrupted || d.config == current {
            gate.release(decision);
            return;
        }
        let t = Instant::now();
        let matrix = match prepare(m, Some(&csr), d.config.format()) {
            Ok(matrix) => matrix,
            Err(e) => {
                failure = Some(format!("{}: {e}", d.config));
                gate.release(decision);
                return;
            }
        };
        let conversion_seconds = t.elapsed().as_secs_f64();
        stats.conversion_seconds += conversion_seconds;
        if gate.wait_for_release(decision) && !cancel.is_cancelled() {
            mailbox.publish(Update {
                config: d.config,
                matrix,
                conversion_seconds,
                decision,
            });
            stats.published += 1;
            current = d.config;
        } else {
            interrupted = true;
        }
        gate.release(decision);
    });
    match (result, failure) {
        (_, Some(reason)) => AdvisorEnd::Failed(reason),
        (Err(Cancelled), None) => AdvisorEnd::Cancelled,
        (Ok(_), None) if interrupted => AdvisorEnd::Cancelled,
        (Ok(_), None) => AdvisorEnd::Finished,
    }
}

/// Solves while a concurrent advisor predicts a configuration. The solver
/// starts under the default configuration and swaps only at iteration
/// boundaries; advisor failures never abort the solve.
pub fn async_solve<M: Classifier + Sync>(
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    models: &CascadeModelSet<M>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    params.validate()?;
    let start = Instant::now();
    let cancel = CancelToken::new();
    let mailbox = ConfigMailbox::new();
    let gate = DelayGate::new(opts.delay.clone());
    let workers = opts.workers.max(1);
    let default_kernel = KernelRegistry::global().resolve(SpmvConfig::DEFAULT)?;

    let (result, steps, advice) = std::thread::scope(|s| {
        let advisor = std::thread::Builder::new()
            .name("advisor".into())
            .spawn_scoped(s, || advise(m, models, &cancel, &mailbox, &gate))
            .expect("spawn advisor thread");
        let mut exec = SwappingExecutor {
            base: m,
            active: None,
            config: SpmvConfig::DEFAULT,
            kernel: default_kernel,
            workers,
            mailbox: &mailbox,
            gate: &gate,
            iteration: 1,
            steps: Vec::new(),
        };
        let result = gmres_solve(b, params, &mut exec);
        mailbox.mark_converged();
        cancel.cancel();
        gate.stop();
        (result, exec.steps, advisor.join())
    });
    let solve_seconds = start.elapsed().as_secs_f64();
    let outcome = result?;

    let mut report = SolveReport::from_outcome(SolveMode::Async, params, m.nrows(), m.nnz(), workers, outcome);
    report.step_configs = steps;
    let raised = cancel.raised_at().expect("raised after solve");
    match advice {
        Ok(advice) => {
            let pending = mailbox.take().is_some();
            report.advisor_outcome = match advice.end {
                AdvisorEnd::Failed(reason) => AdvisorOutcome::Failed { reason },
                AdvisorEnd::Cancelled => AdvisorOutcome::Cancelled,
                AdvisorEnd::Finished if pending => AdvisorOutcome::Unused,
                AdvisorEnd::Finished => AdvisorOutcome::Completed,
            };
            let mut stats = advice.stats;
            stats.stop_latency_seconds = Some(advice.exited.saturating_duration_since(raised).as_secs_f64());
            stats.rows_after_cancel = cancel.work_after_cancel();
            report.advisor = Some(stats);
        }
        Err(_) => {
            report.advisor_outcome = AdvisorOutcome::Failed {
                reason: "advisor thread panicked".into(),
            };
        }
    }
    report.phases = vec![phase("solve", solve_seconds)];
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Dispatches on `mode`.
pub fn solve_with_mode<M: Classifier + Sync>(
    mode: SolveMode,
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    models: Option<&CascadeModelSet<M>>,
    opts: &SolveOptions,
) -> Result<SolveReport, SolveError> {
    match (mode, models) {
        (SolveMode::Default, _) => default_solve(m, b, params, opts.workers),
        (SolveMode::Sequential, Some(models)) => sequential_predict_solve(m, b, params, models, opts.workers),
        (SolveMode::Async, Some(models)) => async_solve(m, b, params, models, opts),
        (_, None) => Err(SolveError::InvalidParams(format!(
            "mode {} needs cascade models",
            mode.as_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> CooMatrix {
        CooMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).unwrap()
    }

    #[test]
    fn identity_async_keeps_default() {
        let m = identity(50);
        let models = CascadeModelSet::forced("DIA/LibA".parse().unwrap());
        let p = GmresParams::default();
        let b = p.rhs(&m);
        let r = async_solve(&m, &b, &p, &models, &SolveOptions::with_workers(2)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.config_timeline.len(), 1);
        assert!(matches!(
            r.advisor_outcome,
            AdvisorOutcome::Cancelled | AdvisorOutcome::Unused
        ));
    }

    #[test]
    fn sequential_uses_one_config() {
        let m = identity(20);
        let models = CascadeModelSet::forced("ELL/LibC".parse().unwrap());
        let p = GmresParams::default();
        let r = sequential_predict_solve(&m, &p.rhs(&m), &p, &models, 1).unwrap();
        assert_eq!(r.config_timeline.len(), 1);
        assert_eq!(r.final_config(), "ELL/LibC".parse().unwrap());
        assert_eq!(r.advisor_outcome, AdvisorOutcome::Completed);
        let sum: f64 = r.phases.iter().map(|p| p.seconds).sum();
        assert!(sum <= r.wall_seconds + 1e-9);
    }

    #[test]
    fn inapplicable_prediction_falls_back() {
        let n = 20_000;
        let t = (0..n).flat_map(|i| [(i, i, 4.0), (i, (i * 7919 + 13) % n, 0.5)]);
        let m = CooMatrix::from_triplets(n, n, t).unwrap();
        let models = CascadeModelSet::forced("DIA/LibA".parse().unwrap());
        let p = GmresParams::default();
        let b = p.rhs(&m);
        let r = sequential_predict_solve(&m, &b, &p, &models, 1).unwrap();
        assert_eq!(r.final_config(), SpmvConfig::DEFAULT);
        assert!(matches!(r.advisor_outcome, AdvisorOutcome::Failed { .. }));
        let r = async_solve(&m, &b, &p, &models, &SolveOptions::with_workers(1)).unwrap();
        assert!(r.converged);
        assert_eq!(r.config_timeline.len(), 1);
    }

    #[test]
    fn modes_need_models() {
        let m = identity(3);
        let p = GmresParams::default();
        let none: Option<&CascadeModelSet> = None;
        let err = solve_with_mode(SolveMode::Async, &m, &[1.0; 3], &p, none, &SolveOptions::with_workers(1));
        assert!(matches!(err, Err(SolveError::InvalidParams(_))));
        let ok = solve_with_mode(SolveMode::Default, &m, &[1.0; 3], &p, none, &SolveOptions::with_workers(1));
        assert!(ok.unwrap().converged);
    }
}
