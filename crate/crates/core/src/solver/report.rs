//! Serializable record of one solve.

use super::gmres::{GmresOutcome, GmresParams, TimelineEntry};
use crate::kernels::SpmvConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum SolveMode {
    /// Default configuration throughout, no prediction.
    #[serde(rename = "default")]
    #[value(name = "default")]
    Default,
    /// Predict first, then solve under the predicted configuration.
    #[serde(rename = "seq")]
    #[value(name = "seq")]
    Sequential,
    /// Predict while solving and swap at iteration boundaries.
    #[serde(rename = "async")]
    #[value(name = "async")]
    Async,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Default => "default",
            SolveMode::Sequential => "seq",
            SolveMode::Async => "async",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdvisorOutcome {
    /// The advisor finished and its final configuration was applied (or
    /// matched the one already running).
    Completed,
    /// The solver converged first and stopped the advisor.
    Cancelled,
    /// No advisor ran, or its last update arrived after the solver finished.
    Unused,
    /// The advisor hit an error; the solver kept its configuration.
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub model: String,
    pub config: SpmvConfig,
    pub is_terminal: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdvisorStats {
    pub feature_seconds: f64,
    pub inference_seconds: f64,
    pub conversion_seconds: f64,
    pub decisions: Vec<DecisionRecord>,
    pub published: usize,
    /// Time between the cancel request and the advisor exiting.
    pub stop_latency_seconds: Option<f64>,
    /// Rows of feature work the advisor did after the cancel request.
    pub rows_after_cancel: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTiming {
    pub phase: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: SolveMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<String>,
    pub nrows: usize,
    pub nnz: usize,
    pub params: GmresParams,
    pub workers: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub residual_history: Vec<f64>,
    pub config_timeline: Vec<TimelineEntry>,
    pub advisor_outcome: AdvisorOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisor: Option<AdvisorStats>,
    pub phases: Vec<PhaseTiming>,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub solution: Vec<f64>,
    /// `(iteration, config)` for every executor call, when recorded.
    #[serde(skip)]
    pub step_configs: Vec<(usize, SpmvConfig)>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
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

impl SolveReport {
    pub(crate) fn from_outcome(
        mode: SolveMode,
        params: &GmresParams,
        nrows: usize,
        nnz: usize,
        workers: usize,
        outcome: GmresOutcome,
    ) -> Self {
        Self {
            mode,
            matrix: None,
            nrows,
            nnz,
            params: *params,
            workers,
            converged: outcome.converged,
            iterations: outcome.iterations,
            final_residual: outcome.final_residual(),
            residual_history: outcome.residual_history,
            config_timeline: outcome.config_timeline,
            advisor_outcome: AdvisorOutcome::Unused,
            advisor: None,
            phases: Vec::new(),
            wall_seconds: 0.0,
            solution: outcome.solution,
            step_configs: Vec::new(),
        }
    }

    /// Configuration active when the solve ended.
    pub fn final_config(&self) -> SpmvConfig {
        self.config_timeline
            .last()
            .map(|e| e.config)
            .unwrap_or(SpmvConfig::DEFAULT)
    }

    /// Iterations at which the configuration changed.
    pub fn swap_iterations(&self) -> Vec<usize> {
        self.config_timeline.iter().skip(1).map(|e| e.iteration).collect()
    }

    /// Configuration active during `iteration`.
    pub fn config_at(&self, iteration: usize) -> SpmvConfig {
        self.config_timeline
            .iter()
            .take_while(|e| e.iteration <= iteration)
            .last()
            .map(|e| e.config)
            .unwrap_or(SpmvConfig::DEFAULT)
    }

    pub fn phase_seconds(&self, phase: &str) -> Option<f64> {
        self.phases.iter().find(|p| p.phase == phase).map(|p| p.seconds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ReportError> {
        let file = path.as_ref().to_path_buf();
        std::fs::write(&file, self.to_json()).map_err(|source| ReportError::Io { file, source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReportError> {
        let file = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&file).map_err(|source| ReportError::Io {
            file: file.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ReportError::Parse { file, source })
    }
}
