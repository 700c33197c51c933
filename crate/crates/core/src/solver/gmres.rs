//! Restarted GMRES(m) with modified Gram-Schmidt Arnoldi and Givens rotations.
//!
//! One Arnoldi step is one iteration and costs exactly one executor call.
//! Executors are polled for configuration swaps only between iterations.

use crate::kernels::{BoundKernel, KernelError, SpmvConfig};
use crate::matrix::{CooMatrix, MatrixError, MatrixView};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmresParams {
    pub restart: usize,
    /// Relative residual threshold `||b - Ax|| / ||b||`.
    pub tol: f64,
    pub max_iters: usize,
    /// Seed for a random right-hand side; `None` means `b = A * 1`.
    pub seed: Option<u64>,
}

impl Default for GmresParams {
    fn default() -> Self {
        Self {
            restart: 30,
            tol: 1e-8,
            max_iters: 1000,
            seed: None,
        }
    }
}

impl GmresParams {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.restart == 0 {
            return Err(SolveError::InvalidParams("restart length must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(SolveError::InvalidParams(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Right-hand side for `m`: `A * 1`, or uniform in `[-1, 1)` when seeded.
    pub fn rhs(&self, m: &CooMatrix) -> Vec<f64> {
        match self.seed {
            Some(seed) => {
                let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
                (0..m.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
            None => {
                let mut b = vec![0.0; m.nrows()];
                for (r, _, v) in m.triplets() {
                    b[r] += v;
                }
                b
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("invalid solver parameters: {0}")]
    InvalidParams(String),
    #[error("matrix must be square, got {nrows}x{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("right-hand side has length {found}, expected {expected}")]
    RhsLength { expected: usize, found: usize },
    #[error("non-finite value in Arnoldi step at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("Krylov breakdown at iteration {iteration} with relative residual {residual:e} above tolerance")]
    Stagnation { iteration: usize, residual: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Conversion(#[from] MatrixError),
}

/// A configuration change applied at an iteration boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swap {
    pub config: SpmvConfig,
    pub cost_seconds: f64,
}

/// One row of the configuration timeline: `config` is active from
/// `iteration` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub iteration: usize,
    pub config: SpmvConfig,
    pub swap_cost_seconds: f64,
}

/// The matrix-vector product used by the solver.
pub trait SpmvExecutor {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn config(&self) -> SpmvConfig;
    fn apply(&mut self, x: &[f64], y: &mut [f64]);

    /// Called before iteration `iteration` (from 2 on). Returns the swap
    /// performed, if any.
    fn at_boundary(&mut self, _iteration: usize) -> Option<Swap> {
        None
    }
}

impl<E: SpmvExecutor + ?Sized> SpmvExecutor for &mut E {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn config(&self) -> SpmvConfig {
        (**self).config()
    }
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn at_boundary(&mut self, iteration: usize) -> Option<Swap> {
        (**self).at_boundary(iteration)
    }
}

/// Executor bound to one configuration for the whole solve.
#[derive(Debug, Clone, Copy)]
pub struct StaticExecutor<'a>(BoundKernel<'a>);

impl<'a> StaticExecutor<'a> {
    pub fn new(
        config: SpmvConfig,
        matrix: impl Into<MatrixView<'a>>,
        workers: usize,
    ) -> Result<Self, KernelError> {
        BoundKernel::new(config, matrix, workers).map(Self)
    }
}

impl SpmvExecutor for StaticExecutor<'_> {
    fn nrows(&self) -> usize {
        self.0.matrix().nrows()
    }
    fn ncols(&self) -> usize {
        self.0.matrix().ncols()
    }
    fn config(&self) -> SpmvConfig {
        self.0.config()
    }
    fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        self.0.apply(x, y);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub solution: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual estimate after each iteration.
    pub residual_history: Vec<f64>,
    pub config_timeline: Vec<TimelineEntry>,
}

impl GmresOutcome {
    pub fn final_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`.
pub fn gmres_solve<E: SpmvExecutor>(
    b: &[f64],
    params: &GmresParams,
    mut exec: E,
) -> Result<GmresOutcome, SolveError> {
    params.validate()?;
    let (n, ncols) = (exec.nrows(), exec.ncols());
    if n != ncols {
        return Err(SolveError::NotSquare { nrows: n, ncols });
    }
    if b.len() != n {
        return Err(SolveError::RhsLength {
            expected: n,
            found: b.len(),
        });
    }

    let mut out = GmresOutcome {
        solution: vec![0.0; n],
        converged: false,
        iterations: 0,
        residual_history: Vec::new(),
        config_timeline: vec![TimelineEntry {
            iteration: 1,
            config: exec.config(),
            swap_cost_seconds: 0.0,
        }],
    };
    let bnorm = norm(b);
    if !bnorm.is_finite() {
        return Err(SolveError::NonFinite { iteration: 0 });
    }
    if params.max_iters == 0 {
        return Ok(out);
    }
    if bnorm == 0.0 {
        out.converged = true;
        out.residual_history.push(0.0);
        return Ok(out);
    }

    let m = params.restart.min(n.max(1));
    let mut basis: Vec<Vec<f64>> = (0..=m).map(|_| vec![0.0; n]).collect();
    let mut hess = vec![vec![0.0; m + 1]; m];
    let mut cs = vec![0.0; m];
    let mut sn = vec![0.0; m];
    let mut g = vec![0.0; m + 1];
    let mut w = vec![0.0; n];
    let x = &mut out.solution;

    let poll = |exec: &mut E, iteration: usize, timeline: &mut Vec<TimelineEntry>| {
        if let Some(swap) = exec.at_boundary(iteration) {
            timeline.push(TimelineEntry {
                iteration,
                config: swap.config,
                swap_cost_seconds: swap.cost_seconds,
            });
        }
    };

    loop {
        let r = &mut basis[0];
        if out.iterations == 0 {
            r.copy_from_slice(b);
        } else {
            poll(&mut exec, out.iterations + 1, &mut out.config_timeline);
            exec.apply(x, &mut w);
            for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
                *ri = bi - wi;
            }
        }
        let beta = norm(r);
        if !beta.is_finite() {
            return Err(SolveError::NonFinite {
                iteration: out.iterations,
            });
        }
        if out.iterations > 0 && beta / bnorm <= params.tol {
            out.converged = true;
            return Ok(out);
        }
        if out.iterations >= params.max_iters {
            return Ok(out);
        }
        r.iter_mut().for_each(|v| *v /= beta);
        g.fill(0.0);
        g[0] = beta;

        let mut steps = 0;
        let mut breakdown = false;
        let mut residual = beta / bnorm;
        for j in 0..m {
            let iteration = out.iterations + 1;
            if j > 0 {
                poll(&mut exec, iteration, &mut out.config_timeline);
            }
            exec.apply(&basis[j], &mut w);
            let wnorm = norm(&w);
            let h = &mut hess[j];
            for (i, v) in basis[..=j].iter().enumerate() {
                let hij = dot(&w, v);
                h[i] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hnext = norm(&w);
            h[j + 1] = hnext;
            if !hnext.is_finite() || h[..=j].iter().any(|v| !v.is_finite()) {
                return Err(SolveError::NonFinite { iteration });
            }
            for i in 0..j {
                let (a, c) = (h[i], h[i + 1]);
                h[i] = cs[i] * a + sn[i] * c;
                h[i + 1] = -sn[i] * a + cs[i] * c;
            }
            let denom = h[j].hypot(h[j + 1]);
            let (c, s) = if denom == 0.0 { (0.0, 1.0) } else { (h[j] / denom, h[j + 1] / denom) };
            cs[j] = c;
            sn[j] = s;
            h[j] = denom;
            h[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;

            out.iterations = iteration;
            residual = g[j + 1].abs() / bnorm;
            out.residual_history.push(residual);
            steps = j + 1;
            breakdown = hnext <= 1e-14 * wnorm.max(f64::MIN_POSITIVE);
            if residual <= params.tol || breakdown || out.iterations >= params.max_iters {
                break;
            }
            let next = &mut basis[j + 1];
            next.iter_mut().zip(&w).for_each(|(v, wk)| *v = wk / hnext);
        }

        let mut y = g[..steps].to_vec();
        for i in (0..steps).rev() {
            let hii = hess[i][i];
            y[i] = if hii == 0.0 { 0.0 } else { y[i] / hii };
            for k in 0..i {
                y[k] -= hess[i][k] * y[i];
            }
        }
        for (v, yi) in basis[..steps].iter().zip(&y) {
            x.iter_mut().zip(v).for_each(|(xk, vk)| *xk += yi * vk);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::NonFinite {
                iteration: out.iterations,
            });
        }

        if residual <= params.tol {
            out.converged = true;
            return Ok(out);
        }
        if breakdown {
            return Err(SolveError::Stagnation {
                iteration: out.iterations,
                residual,
            });
        }
        if out.iterations >= params.max_iters {
            return Ok(out);
        }
    }
}
