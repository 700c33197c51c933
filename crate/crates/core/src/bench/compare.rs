//! Side-by-side runs of the default, predict-then-solve and
//! predict-while-solve drivers, and summaries over stored reports.

use crate::inference::{CascadeModelSet, Classifier};
use crate::matrix::CooMatrix;
use crate::solver::{
    async_solve, default_solve, sequential_predict_solve, GmresParams, SolveError, SolveMode, SolveOptions,
    SolveReport,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    pub default: SolveReport,
    pub sequential: SolveReport,
    #[serde(rename = "async")]
    pub asynchronous: SolveReport,
    /// Default wall time over predict-then-solve wall time.
    pub speedup_sequential: f64,
    /// Default wall time over predict-while-solve wall time.
    pub speedup_async: f64,
    pub async_swap_iterations: Vec<usize>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::NAN
    }
}

pub fn compare_solvers<M: Classifier + Sync>(
    m: &CooMatrix,
    b: &[f64],
    params: &GmresParams,
    models: &CascadeModelSet<M>,
    opts: &SolveOptions,
) -> Result<ComparisonReport, SolveError> {
    let default = default_solve(m, b, params, opts.workers)?;
    let sequential = sequential_predict_solve(m, b, params, models, opts.workers)?;
    let asynchronous = async_solve(m, b, params, models, opts)?;
    Ok(ComparisonReport {
        matrix: None,
        speedup_sequential: ratio(default.wall_seconds, sequential.wall_seconds),
        speedup_async: ratio(default.wall_seconds, asynchronous.wall_seconds),
        async_swap_iterations: asynchronous.swap_iterations(),
        default,
        sequential,
        asynchronous,
    })
}

impl ComparisonReport {
    pub fn set_matrix(&mut self, name: &str) {
        self.matrix = Some(name.to_string());
        for r in [&mut self.default, &mut self.sequential, &mut self.asynchronous] {
            r.matrix = Some(name.to_string());
        }
    }

    pub fn reports(&self) -> [&SolveReport; 3] {
        [&self.default, &self.sequential, &self.asynchronous]
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(m) = &self.matrix {
            let _ = writeln!(out, "matrix {m}");
        }
        let _ = writeln!(
            out,
            "{:<8} {:>9} {:>6} {:>12} {:>12}  timeline",
            "mode", "converged", "iters", "residual", "wall_s"
        );
        for r in self.reports() {
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>6} {:>12.3e} {:>12.6}  {}",
                r.mode.as_str(),
                r.converged,
                r.iterations,
                r.final_residual.unwrap_or(f64::NAN),
                r.wall_seconds,
                timeline_text(r)
            );
        }
        let _ = writeln!(
            out,
            "speedup vs default: seq {:.3}x, async {:.3}x",
            self.speedup_sequential, self.speedup_async
        );
        out
    }
}

/// `iteration:config` pairs, e.g. `1:COO/LibA 4:DIA/LibA`.
pub fn timeline_text(r: &SolveReport) -> String {
    r.config_timeline
        .iter()
        .map(|e| format!("{}:{}", e.iteration, e.config))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One matrix's wall times across modes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SpeedupRow {
    pub matrix: String,
    pub default_seconds: Option<f64>,
    pub sequential_seconds: Option<f64>,
    pub async_seconds: Option<f64>,
    pub speedup_sequential: Option<f64>,
    pub speedup_async: Option<f64>,
    pub final_config: Option<String>,
    pub async_swaps: Option<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum SummaryError {
    #[error("{}: {source}", file.display())]
    Io {
        file: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: not a solve or comparison report ({message})", file.display())]
    Parse { file: std::path::PathBuf, message: String },
    #[error("no reports in {}", .0.display())]
    Empty(std::path::PathBuf),
}

/// Loads every `.json` solve or comparison report in `dir`.
pub fn load_reports(dir: &Path) -> Result<Vec<SolveReport>, SummaryError> {
    let io = |file: &Path| {
        let file = file.to_path_buf();
        move |source| SummaryError::Io { file, source }
    };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for file in files {
        let text = std::fs::read_to_string(&file).map_err(io(&file))?;
        if let Ok(c) = serde_json::from_str::<ComparisonReport>(&text) {
            out.extend(c.reports().into_iter().cloned());
            continue;
        }
        match serde_json::from_str::<SolveReport>(&text) {
            Ok(r) => out.push(r),
            Err(e) => {
                return Err(SummaryError::Parse {
                    file,
                    message: e.to_string(),
                })
            }
        }
    }
    if out.is_empty() {
        return Err(SummaryError::Empty(dir.to_path_buf()));
    }
    Ok(out)
}

/// Groups reports by matrix; the last report per mode wins.
pub fn summarize(reports: &[SolveReport]) -> Vec<SpeedupRow> {
    let mut by_matrix: BTreeMap<String, SpeedupRow> = BTreeMap::new();
    for r in reports {
        let name = r.matrix.clone().unwrap_or_else(|| "(unnamed)".into());
        let row = by_matrix.entry(name.clone()).or_insert_with(|| SpeedupRow {
            matrix: name,
            ..Default::default()
        });
        match r.mode {
            SolveMode::Default => row.default_seconds = Some(r.wall_seconds),
            SolveMode::Sequential => {
                row.sequential_seconds = Some(r.wall_seconds);
                row.final_config.get_or_insert_with(|| r.final_config().to_string());
            }
            SolveMode::Async => {
                row.async_seconds = Some(r.wall_seconds);
                row.final_config = Some(r.final_config().to_string());
                row.async_swaps = Some(
                    r.swap_iterations()
                        .iter()
                        .map(|i| i.to_string())
                        .collect::<Vec<_>>()
                        .join(" "),
                );
            }
        }
    }
    by_matrix
        .into_values()
        .map(|mut row| {
            if let Some(d) = row.default_seconds {
                row.speedup_sequential = row.sequential_seconds.map(|s| ratio(d, s));
                row.speedup_async = row.async_seconds.map(|s| ratio(d, s));
            }
            row
        })
        .collect()
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

pub fn render_summary(rows: &[SpeedupRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>12} {:>12} {:>12} {:>8} {:>8}  {:<12} swaps",
        "matrix", "default_s", "seq_s", "async_s", "seq_x", "async_x", "config"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<24} {:>12} {:>12} {:>12} {:>8} {:>8}  {:<12} {}",
            r.matrix,
            cell(r.default_seconds, 6),
            cell(r.sequential_seconds, 6),
            cell(r.async_seconds, 6),
            cell(r.speedup_sequential, 3),
            cell(r.speedup_async, 3),
            r.final_config.as_deref().unwrap_or("-"),
            r.async_swaps.as_deref().unwrap_or("-"),
        );
    }
    let mean = |f: fn(&SpeedupRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter_map(f).filter(|x| x.is_finite()).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let _ = writeln!(
        out,
        "mean speedup: seq {}x, async {}x",
        cell(mean(|r| r.speedup_sequential), 3),
        cell(mean(|r| r.speedup_async), 3)
    );
    out
}

pub fn write_summary_csv(rows: &[SpeedupRow], path: &Path) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
