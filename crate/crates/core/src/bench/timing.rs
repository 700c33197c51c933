//! Per-configuration SpMV timing with warmups and a reusable output buffer.

use crate::kernels::{default_workers, enumerate_configs, BoundKernel, SpmvConfig};
use crate::matrix::{convert, AnyMatrix, CooMatrix, FormatTag, MatrixError, MatrixView};
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

/// Shortest time reported for a configuration, in seconds; a measured zero
/// means the run finished below clock resolution.
pub const MIN_REPORTED_SECONDS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingOptions {
    pub runs: usize,
    pub warmups: usize,
    pub workers: usize,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            runs: 200,
            warmups: 10,
            workers: default_workers(),
        }
    }
}

/// Where a timing table was measured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub workers: usize,
    pub host: String,
}

impl Fingerprint {
    pub fn current(workers: usize) -> Self {
        let host = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| std::fs::read_to_string("/proc/sys/kernel/hostname").ok())
            .map(|h| h.trim().to_string())
            .filter(|h| !h.is_empty())
            .unwrap_or_else(|| "unknown".into());
        Self { workers, host }
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "workers={} host={}", self.workers, self.host)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigTime {
    pub config: SpmvConfig,
    /// Mean seconds per SpMV, or `None` when the format cannot hold the
    /// matrix.
    pub mean_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inapplicable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub matrix: String,
    pub runs: usize,
    pub warmups: usize,
    pub fingerprint: Fingerprint,
    /// One entry per configuration, in configuration index order.
    pub times: Vec<ConfigTime>,
}

#[derive(Debug, thiserror::Error)]
pub enum TimingCacheError {
    #[error("{}: {source}", file.display())]
    Io {
        file: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", file.display())]
    Parse {
        file: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl TimingRecord {
    /// Builds a record from per-index times, for synthetic tables.
    pub fn from_times(matrix: &str, times: &[Option<f64>], fingerprint: Fingerprint) -> Self {
        Self {
            matrix: matrix.to_string(),
            runs: 0,
            warmups: 0,
            fingerprint,
            times: enumerate_configs()
                .iter()
                .zip(times)
                .map(|(&config, &mean_seconds)| ConfigTime {
                    config,
                    mean_seconds,
                    inapplicable: None,
                })
                .collect(),
        }
    }

    pub fn time_of(&self, config: SpmvConfig) -> Option<f64> {
        self.times
            .iter()
            .find(|t| t.config == config)
            .and_then(|t| t.mean_seconds)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TimingCacheError> {
        let file = path.as_ref().to_path_buf();
        let text = serde_json::to_string_pretty(self).expect("timing record serializes");
        std::fs::write(&file, text).map_err(|source| TimingCacheError::Io { file, source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TimingCacheError> {
        let file = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&file).map_err(|source| TimingCacheError::Io {
            file: file.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| TimingCacheError::Parse { file, source })
    }

    /// True when this record was measured with the same settings.
    pub fn matches(&self, opts: &TimingOptions, fingerprint: &Fingerprint) -> bool {
        self.runs == opts.runs
            && self.warmups == opts.warmups
            && &self.fingerprint == fingerprint
            && self.times.len() == enumerate_configs().len()
    }
}

/// Times an already bound kernel. The measured region only calls the kernel
/// on the caller's buffers.
pub fn time_prepared(kernel: &BoundKernel<'_>, x: &[f64], y: &mut [f64], runs: usize, warmups: usize) -> f64 {
    for _ in 0..warmups {
        kernel.apply(black_box(x), black_box(&mut *y));
    }
    let runs = runs.max(1);
    let start = Instant::now();
    for _ in 0..runs {
        kernel.apply(black_box(x), black_box(&mut *y));
    }
    let total = start.elapsed().as_secs_f64();
    (total / runs as f64).max(MIN_REPORTED_SECONDS)
}

fn storage(m: &CooMatrix, format: FormatTag) -> Result<Option<AnyMatrix>, MatrixError> {
    if format == FormatTag::Coo {
        Ok(None)
    } else {
        convert(m, format).map(Some)
    }
}

/// Mean seconds of one SpMV under `cfg`, excluding conversion. Fails only
/// when the format cannot hold `m`.
pub fn time_config(m: &CooMatrix, cfg: SpmvConfig, opts: &TimingOptions) -> Result<f64, MatrixError> {
    let converted = storage(m, cfg.format())?;
    let view = converted.as_ref().map_or(MatrixView::Coo(m), AnyMatrix::view);
    let kernel = BoundKernel::new(cfg, view, opts.workers).expect("storage matches config format");
    let x = vec![1.0; m.ncols()];
    let mut y = vec![0.0; m.nrows()];
    Ok(time_prepared(&kernel, &x, &mut y, opts.runs, opts.warmups))
}

/// Times every configuration. Each format is converted once and shared by
/// its configurations.
pub fn time_all_configs(id: &str, m: &CooMatrix, opts: &TimingOptions) -> TimingRecord {
    let x = vec![1.0; m.ncols()];
    let mut y = vec![0.0; m.nrows()];
    let mut times = Vec::with_capacity(enumerate_configs().len());
    for format in FormatTag::ALL {
        let converted = storage(m, format);
        for &config in enumerate_configs().iter().filter(|c| c.format() == format) {
            let entry = match &converted {
                Ok(c) => {
                    let view = c.as_ref().map_or(MatrixView::Coo(m), AnyMatrix::view);
                    let kernel = BoundKernel::new(config, view, opts.workers).expect("storage matches config format");
                    ConfigTime {
                        config,
                        mean_seconds: Some(time_prepared(&kernel, &x, &mut y, opts.runs, opts.warmups)),
                        inapplicable: None,
                    }
                }
                Err(e) => ConfigTime {
                    config,
                    mean_seconds: None,
                    inapplicable: Some(e.to_string()),
                },
            };
            times.push(entry);
        }
    }
    times.sort_by_key(|t| t.config.index());
    TimingRecord {
        matrix: id.to_string(),
        runs: opts.runs,
        warmups: opts.warmups,
        fingerprint: Fingerprint::current(opts.workers),
        times,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::DIA_OFFSET_CAP;

    fn opts(runs: usize) -> TimingOptions {
        TimingOptions {
            runs,
            warmups: 1,
            workers: 1,
        }
    }

    #[test]
    fn single_run_is_positive() {
        let m = CooMatrix::from_triplets(3, 3, (0..3).map(|i| (i, i, 1.0))).unwrap();
        for &cfg in enumerate_configs() {
            assert!(time_config(&m, cfg, &opts(1)).unwrap() > 0.0);
        }
    }

    #[test]
    fn dia_beyond_cap_is_inapplicable() {
        let n = DIA_OFFSET_CAP + 2;
        // one entry per offset in the first row and column
        let t = (0..n).map(|j| (0, j, 1.0)).chain((1..n).map(|i| (i, 0, 1.0)));
        let m = CooMatrix::from_triplets(n, n, t).unwrap();
        let err = time_config(&m, "DIA/LibA".parse().unwrap(), &opts(1)).unwrap_err();
        assert!(err.is_inapplicable());
        let rec = time_all_configs("wide", &m, &opts(1));
        let dia = rec.times.iter().find(|t| t.config.format() == FormatTag::Dia).unwrap();
        assert!(dia.mean_seconds.is_none() && dia.inapplicable.is_some());
        assert!(rec.time_of(SpmvConfig::DEFAULT).unwrap() > 0.0);
    }

    #[test]
    fn record_round_trips_through_json() {
        let m = CooMatrix::from_triplets(4, 4, (0..4).map(|i| (i, i, 2.0))).unwrap();
        let rec = time_all_configs("diag", &m, &opts(2));
        assert_eq!(rec.times.len(), enumerate_configs().len());
        assert!(rec.times.iter().enumerate().all(|(i, t)| t.config.index() == i));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("diag.json");
        rec.save(&path).unwrap();
        let back = TimingRecord::load(&path).unwrap();
        assert_eq!(back, rec);
        assert!(back.matches(&opts(2), &Fingerprint::current(1)));
        assert!(!back.matches(&opts(3), &Fingerprint::current(1)));
    }
}
