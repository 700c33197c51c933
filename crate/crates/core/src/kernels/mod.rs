//! The executable configuration space: one SpMV kernel per valid
//! [`SpmvConfig`].
//!
//! Kernels write into a caller-provided output buffer. With `workers == 1`
//! every kernel runs sequentially on the calling thread and allocates
//! nothing; otherwise work is split into `workers` partitions executed on
//! the rayon pool. Results are bitwise reproducible for a fixed worker
//! count, except for the atomic-accumulate COO kernel.

mod config;
mod coo;
mod csr;
mod dia;
mod ell;

pub use config::{enumerate_configs, ConfigError, LaneWidth, Library, SpmvConfig};

use crate::matrix::{DimensionMismatch, FormatTag, MatrixView};
use rayon::prelude::*;
use std::sync::OnceLock;

/// Environment variable overriding the default worker count.
pub const WORKERS_ENV: &str = "SPMV_WORKERS";

/// Worker count used when none is given: `SPMV_WORKERS` if set, else the
/// available hardware parallelism. Fixed for the lifetime of the process.
pub fn default_workers() -> usize {
    static WORKERS: OnceLock<usize> = OnceLock::new();
    *WORKERS.get_or_init(|| {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&w| w > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KernelError {
    #[error(transparent)]
    Unsupported(#[from] ConfigError),
    #[error("config {config} expects {expected} storage, got {found}")]
    FormatMismatch {
        config: SpmvConfig,
        expected: FormatTag,
        found: FormatTag,
    },
    #[error("input vector: {0}")]
    Input(DimensionMismatch),
    #[error("output vector: {0}")]
    Output(DimensionMismatch),
}

/// Kernel entry point. Callers guarantee the matrix format matches the
/// registered config and that `x`/`y` have the right lengths.
pub type KernelFn = fn(MatrixView<'_>, &[f64], &mut [f64], usize);

/// Maps every valid configuration to its kernel.
#[derive(Debug)]
pub struct KernelRegistry {
    entries: Vec<(SpmvConfig, KernelFn)>,
}

impl KernelRegistry {
    pub fn standard() -> Self {
        let entries = enumerate_configs()
            .iter()
            .map(|&cfg| (cfg, kernel_for(cfg)))
            .collect();
        Self { entries }
    }

    /// Shared instance of [`standard`](Self::standard).
    pub fn global() -> &'static KernelRegistry {
        static REGISTRY: OnceLock<KernelRegistry> = OnceLock::new();
        REGISTRY.get_or_init(KernelRegistry::standard)
    }

    pub fn default_config(&self) -> SpmvConfig {
        SpmvConfig::DEFAULT
    }

    pub fn configs(&self) -> impl Iterator<Item = SpmvConfig> + '_ {
        self.entries.iter().map(|(c, _)| *c)
    }

    pub fn resolve(&self, cfg: SpmvConfig) -> Result<KernelFn, KernelError> {
        self.entries
            .iter()
            .find(|(c, _)| *c == cfg)
            .map(|(_, k)| *k)
            .ok_or(KernelError::Unsupported(ConfigError::Unsupported {
                format: cfg.format(),
                library: cfg.library(),
            }))
    }
}

fn kernel_for(cfg: SpmvConfig) -> KernelFn {
    use FormatTag::*;
    use Library::*;
    match (cfg.format(), cfg.library(), cfg.lane_width()) {
        (Coo, LibA, _) => |m, x, y, w| coo::segmented(as_coo(m), x, y, w, coo::Mode::Overwrite),
        (Coo, LibB, _) => |m, x, y, w| coo::atomic_accumulate(as_coo(m), x, y, w),
        (Csr, LibA, Some(LaneWidth::W2)) => |m, x, y, w| csr::lanes::<2>(as_csr(m), x, y, w),
        (Csr, LibA, Some(LaneWidth::W4)) => |m, x, y, w| csr::lanes::<4>(as_csr(m), x, y, w),
        (Csr, LibA, Some(LaneWidth::W8)) => |m, x, y, w| csr::lanes::<8>(as_csr(m), x, y, w),
        (Csr, LibA, Some(LaneWidth::W16)) => |m, x, y, w| csr::lanes::<16>(as_csr(m), x, y, w),
        (Csr, LibA, Some(LaneWidth::W32)) => |m, x, y, w| csr::lanes::<32>(as_csr(m), x, y, w),
        (Csr, LibB, _) => |m, x, y, w| csr::row_scalar(as_csr(m), x, y, w),
        (Csr, LibC, _) => |m, x, y, w| csr::merge_path(as_csr(m), x, y, w),
        (Ell, LibA, _) => |m, x, y, w| ell::row_major(as_ell(m), x, y, w),
        (Ell, LibC, _) => |m, x, y, w| ell::column_strided(as_ell(m), x, y, w),
        (Dia, LibA, _) => |m, x, y, w| dia::diagonals(as_dia(m), x, y, w),
        (Hyb, LibA, _) => |m, x, y, w| {
            let MatrixView::Hyb(h) = m else { unreachable!("format checked by caller") };
            ell::row_major(h.ell_part(), x, y, w);
            coo::segmented(h.coo_part(), x, y, w, coo::Mode::Accumulate);
        },
        _ => unreachable!("enumerate_configs yields only supported configs"),
    }
}

fn as_coo(m: MatrixView<'_>) -> &crate::matrix::CooMatrix {
    match m {
        MatrixView::Coo(c) => c,
        _ => unreachable!("format checked by caller"),
    }
}

fn as_csr(m: MatrixView<'_>) -> &crate::matrix::CsrMatrix {
    match m {
        MatrixView::Csr(c) => c,
        _ => unreachable!("format checked by caller"),
    }
}

fn as_ell(m: MatrixView<'_>) -> &crate::matrix::EllMatrix {
    match m {
        MatrixView::Ell(c) => c,
        _ => unreachable!("format checked by caller"),
    }
}

fn as_dia(m: MatrixView<'_>) -> &crate::matrix::DiaMatrix {
    match m {
        MatrixView::Dia(c) => c,
        _ => unreachable!("format checked by caller"),
    }
}

fn check(
    cfg: SpmvConfig,
    m: MatrixView<'_>,
    x: &[f64],
    y: &[f64],
) -> Result<(), KernelError> {
    if m.format() != cfg.format() {
        return Err(KernelError::FormatMismatch {
            config: cfg,
            expected: cfg.format(),
            found: m.format(),
        });
    }
    if x.len() != m.ncols() {
        return Err(KernelError::Input(DimensionMismatch {
            expected: m.ncols(),
            found: x.len(),
        }));
    }
    if y.len() != m.nrows() {
        return Err(KernelError::Output(DimensionMismatch {
            expected: m.nrows(),
            found: y.len(),
        }));
    }
    Ok(())
}

/// Computes `y = A x` with the kernel registered for `cfg`, overwriting `y`.
pub fn execute_spmv_into<'a>(
    cfg: SpmvConfig,
    m: impl Into<MatrixView<'a>>,
    x: &[f64],
    y: &mut [f64],
    workers: usize,
) -> Result<(), KernelError> {
    let m = m.into();
    let kernel = KernelRegistry::global().resolve(cfg)?;
    check(cfg, m, x, y)?;
    kernel(m, x, y, workers.max(1));
    Ok(())
}

/// Allocating wrapper around [`execute_spmv_into`].
pub fn execute_spmv<'a>(
    cfg: SpmvConfig,
    m: impl Into<MatrixView<'a>>,
    x: &[f64],
    workers: usize,
) -> Result<Vec<f64>, KernelError> {
    let m = m.into();
    let mut y = vec![0.0; m.nrows()];
    execute_spmv_into(cfg, m, x, &mut y, workers)?;
    Ok(y)
}

/// A kernel resolved and checked once, callable repeatedly without lookup.
#[derive(Clone, Copy)]
pub struct BoundKernel<'a> {
    config: SpmvConfig,
    matrix: MatrixView<'a>,
    kernel: KernelFn,
    workers: usize,
}

impl<'a> BoundKernel<'a> {
    pub fn new(
        config: SpmvConfig,
        matrix: impl Into<MatrixView<'a>>,
        workers: usize,
    ) -> Result<Self, KernelError> {
        let matrix = matrix.into();
        if matrix.format() != config.format() {
            return Err(KernelError::FormatMismatch {
                config,
                expected: config.format(),
                found: matrix.format(),
            });
        }
        Ok(Self {
            config,
            matrix,
            kernel: KernelRegistry::global().resolve(config)?,
            workers: workers.max(1),
        })
    }

    pub fn config(&self) -> SpmvConfig {
        self.config
    }

    pub fn matrix(&self) -> MatrixView<'a> {
        self.matrix
    }

    /// # Panics
    /// If `x` or `y` have the wrong length.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.matrix.ncols(), "input length");
        assert_eq!(y.len(), self.matrix.nrows(), "output length");
        (self.kernel)(self.matrix, x, y, self.workers);
    }
}

impl std::fmt::Debug for BoundKernel<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BoundKernel")
            .field("config", &self.config)
            .field("workers", &self.workers)
            .finish()
    }
}

/// Runs `row_value(i)` for every row, writing `y[i]`. Rows are split into
/// `workers` contiguous blocks.
pub(crate) fn for_each_row_blocked<F>(y: &mut [f64], workers: usize, row_value: F)
where
    F: Fn(usize) -> f64 + Sync,
{
    if workers <= 1 || y.len() < 2 {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = row_value(i);
        }
        return;
    }
    let block = y.len().div_ceil(workers);
    y.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
        let base = b * block;
        for (k, yi) in chunk.iter_mut().enumerate() {
            *yi = row_value(base + k);
        }
    });
}

/// Start of partition `p` when `n` items are split into `parts` pieces.
pub(crate) fn partition_start(n: usize, parts: usize, p: usize) -> usize {
    (n as u128 * p as u128 / parts as u128) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{convert, spmv_reference, AnyMatrix, CooMatrix, CsrMatrix};

    fn identity(n: usize) -> CooMatrix {
        CooMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0))).unwrap()
    }

    fn as_format(m: &CooMatrix, cfg: SpmvConfig) -> AnyMatrix {
        convert(m, cfg.format()).unwrap()
    }

    #[test]
    fn csr_lane32_identity() {
        let cfg: SpmvConfig = "CSR/LibA/32".parse().unwrap();
        let m = as_format(&identity(3), cfg);
        assert_eq!(execute_spmv(cfg, &m, &[1.0, 2.0, 3.0], 4).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hyb_matches_coo_on_ones() {
        let t = (0..2).flat_map(|i| (0..3).map(move |j| (i, j, 1.0)));
        let m = CooMatrix::from_triplets(2, 3, t).unwrap();
        let x = [0.5, -1.0, 2.0];
        let hyb: SpmvConfig = "HYB/LibA".parse().unwrap();
        let a = execute_spmv(hyb, &as_format(&m, hyb), &x, 2).unwrap();
        let b = execute_spmv(SpmvConfig::DEFAULT, &m, &x, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_config_on_small_matrix() {
        let t = [(0, 0, 2.0), (0, 3, -1.0), (1, 1, 1.5), (2, 0, 4.0), (2, 2, 1.0), (2, 3, 3.0)];
        let m = CooMatrix::from_triplets(4, 4, t).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let want = spmv_reference(&CsrMatrix::from_coo(&m), &x).unwrap();
        for &cfg in enumerate_configs() {
            for workers in [1, 2, 3, 8] {
                let got = execute_spmv(cfg, &as_format(&m, cfg), &x, workers).unwrap();
                assert_eq!(got, want, "{cfg} with {workers} workers");
            }
        }
    }

    #[test]
    fn format_mismatch_is_reported() {
        let m = identity(2);
        let cfg: SpmvConfig = "DIA/LibA".parse().unwrap();
        assert!(matches!(
            execute_spmv(cfg, &m, &[1.0, 1.0], 1),
            Err(KernelError::FormatMismatch { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = identity(2);
        assert!(matches!(
            execute_spmv(SpmvConfig::DEFAULT, &m, &[1.0], 1),
            Err(KernelError::Input(_))
        ));
        let mut y = vec![0.0; 3];
        assert!(matches!(
            execute_spmv_into(SpmvConfig::DEFAULT, &m, &[1.0, 1.0], &mut y, 1),
            Err(KernelError::Output(_))
        ));
    }

    #[test]
    fn empty_matrices() {
        let m = CooMatrix::from_triplets(3, 2, []).unwrap();
        for &cfg in enumerate_configs() {
            let got = execute_spmv(cfg, &as_format(&m, cfg), &[1.0, 1.0], 3).unwrap();
            assert_eq!(got, vec![0.0; 3], "{cfg}");
        }
    }

    #[test]
    fn registry_default_is_coo_liba() {
        let reg = KernelRegistry::standard();
        assert_eq!(reg.default_config(), SpmvConfig::DEFAULT);
        assert_eq!(reg.configs().count(), 13);
    }

    #[test]
    fn partitions_cover_range() {
        for (n, parts) in [(10, 3), (0, 4), (7, 7), (3, 8)] {
            assert_eq!(partition_start(n, parts, 0), 0);
            assert_eq!(partition_start(n, parts, parts), n);
            for p in 0..parts {
                assert!(partition_start(n, parts, p) <= partition_start(n, parts, p + 1));
            }
        }
    }
}
