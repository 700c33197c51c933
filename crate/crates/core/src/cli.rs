//! Command-line front end. Exit codes: 0 success, 2 usage, 3 input data
//! error, 4 numerical failure.

use crate::bench::{
    build_dataset, compare_solvers, load_reports, render_summary, summarize, time_all_configs,
    write_summary_csv, DatasetError, TimingOptions,
};
use crate::cancel::CancelToken;
use crate::features::{extract_features, FEATURE_NAMES};
use crate::inference::{cascade_predict, CascadeError, CascadeModelSet};
use crate::kernels::{default_workers, WORKERS_ENV};
use crate::matrix::{read_matrix_market, CooMatrix, CsrMatrix};
use crate::solver::{solve_with_mode, GmresParams, SolveError, SolveMode, SolveOptions, SolveReport};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "spmv-cascade", version, about = "Cascaded SpMV configuration prediction and predict-while-solve GMRES")]
pub struct Cli {
    /// Worker threads for SpMV kernels.
    #[arg(long, global = true, env = WORKERS_ENV, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time every configuration on one matrix.
    Bench {
        matrix: PathBuf,
        #[command(flatten)]
        timing: TimingArgs,
        /// Directory for the JSON timing record.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time and label a directory of .mtx files into five CSV datasets.
    Dataset {
        matrix_dir: PathBuf,
        #[command(flatten)]
        timing: TimingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the cascade's decisions for one matrix.
    Predict {
        matrix: PathBuf,
        #[arg(long)]
        models: PathBuf,
    },
    /// Solve `A x = b` with GMRES.
    Solve {
        matrix: PathBuf,
        #[command(flatten)]
        gmres: GmresArgs,
        #[arg(long, value_enum, default_value = "default")]
        mode: SolveMode,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Directory for the JSON solve report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the default, sequential and asynchronous solvers side by side.
    Compare {
        matrix: PathBuf,
        #[command(flatten)]
        gmres: GmresArgs,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize stored solve and comparison reports.
    Report {
        reports_dir: PathBuf,
        /// Directory for `summary.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 10)]
    pub warmups: u64,
}

#[derive(Debug, Args)]
pub struct GmresArgs {
    #[arg(long, default_value_t = 30)]
    pub restart: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    /// Random right-hand side seed; without it `b = A * 1`.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl GmresArgs {
    fn params(&self) -> GmresParams {
        GmresParams {
            restart: self.restart,
            tol: self.tol,
            max_iters: self.max_iters,
            seed: self.seed,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::InvalidParams(_) => CliError::Usage(e.to_string()),
            SolveError::NotSquare { .. }
            | SolveError::RhsLength { .. }
            | SolveError::Kernel(_)
            | SolveError::Conversion(_) => CliError::Input(e.to_string()),
            SolveError::NonFinite { .. } | SolveError::Stagnation { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<CascadeError> for CliError {
    fn from(e: CascadeError) -> Self {
        CliError::Input(format!("loading models: {e}"))
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn output_err(e: std::io::Error) -> CliError {
    CliError::Input(format!("writing output: {e}"))
}

fn load_matrix(path: &Path) -> Result<CooMatrix, CliError> {
    let m = read_matrix_market(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if m.nnz() == 0 {
        return Err(CliError::Input(format!("{}: matrix has no entries", path.display())));
    }
    Ok(m)
}

fn matrix_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "matrix".into())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let workers = cli.workers.map_or_else(default_workers, |w| w as usize);
    match cli.command {
        Command::Bench { matrix, timing, out: dir } => bench(&matrix, &timing, dir.as_deref(), workers, out),
        Command::Dataset {
            matrix_dir,
            timing,
            out: dir,
        } => dataset(&matrix_dir, &timing, &dir, workers, out),
        Command::Predict { matrix, models } => predict(&matrix, &models, out),
        Command::Solve {
            matrix,
            gmres,
            mode,
            models,
            out: dir,
        } => solve(&matrix, &gmres, mode, models.as_deref(), dir.as_deref(), workers, out),
        Command::Compare {
            matrix,
            gmres,
            models,
            out: dir,
        } => compare(&matrix, &gmres, &models, dir.as_deref(), workers, out),
        Command::Report { reports_dir, out: dir } => report(&reports_dir, dir.as_deref(), out),
    }
}

fn timing_options(t: &TimingArgs, workers: usize) -> TimingOptions {
    TimingOptions {
        runs: t.runs as usize,
        warmups: t.warmups as usize,
        workers,
    }
}

fn bench(path: &Path, t: &TimingArgs, dir: Option<&Path>, workers: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let m = load_matrix(path)?;
    let name = matrix_name(path);
    let record = time_all_configs(&name, &m, &timing_options(t, workers));
    writeln!(out, "matrix {name}: {}x{}, {} nonzeros", m.nrows(), m.ncols(), m.nnz()).map_err(output_err)?;
    writeln!(out, "runs={} warmups={} {}", record.runs, record.warmups, record.fingerprint).map_err(output_err)?;
    writeln!(out, "{:<6} {:<14} {:>14}", "index", "config", "mean_s").map_err(output_err)?;
    for (i, t) in record.times.iter().enumerate() {
        let time = match (t.mean_seconds, &t.inapplicable) {
            (Some(s), _) => format!("{s:.6e}"),
            (None, Some(why)) => format!("inapplicable ({why})"),
            (None, None) => "inapplicable".into(),
        };
        writeln!(out, "{i:<6} {:<14} {time:>14}", t.config.to_string()).map_err(output_err)?;
    }
    if let Some(dir) = dir {
        ensure_dir(dir)?;
        let file = dir.join(format!("{name}.json"));
        record.save(&file).map_err(|e| CliError::Input(e.to_string()))?;
        writeln!(out, "wrote {}", file.display()).map_err(output_err)?;
    }
    Ok(())
}

fn dataset(dir: &Path, t: &TimingArgs, out_dir: &Path, workers: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let summary = build_dataset(dir, out_dir, &timing_options(t, workers))?;
    writeln!(
        out,
        "{} matrices labeled, {} skipped, {} timing tables reused",
        summary.rows.len(),
        summary.skipped.len(),
        summary.cached
    )
    .map_err(output_err)?;
    for (name, why) in &summary.skipped {
        writeln!(out, "skipped {name}: {why}").map_err(output_err)?;
    }
    for (file, n) in &summary.counts.0 {
        writeln!(out, "{file}.csv {n} rows").map_err(output_err)?;
    }
    Ok(())
}

fn predict(path: &Path, models_dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let models = CascadeModelSet::load_dir(models_dir)?;
    let m = load_matrix(path)?;
    let features = extract_features(&CsrMatrix::from_coo(&m), &CancelToken::new()).expect("fresh token is never cancelled");
    let values = features.to_array();
    let listed: Vec<String> = FEATURE_NAMES
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    writeln!(out, "features {}", listed.join(" ")).map_err(output_err)?;
    let mut lines = Vec::new();
    let last = cascade_predict(&models, &features, |d| {
        let scores: Vec<String> = d.scores.iter().map(|(c, s)| format!("{c}:{s:.4}")).collect();
        lines.push(format!(
            "{:<8} {:<8} -> {:<12} terminal={} scores=[{}] time_us={:.1}",
            format!("{:?}", d.stage).to_lowercase(),
            d.model.file_stem(),
            d.config.to_string(),
            d.is_terminal,
            scores.join(" "),
            d.elapsed.as_secs_f64() * 1e6
        ));
    });
    for l in lines {
        writeln!(out, "{l}").map_err(output_err)?;
    }
    writeln!(out, "config {last}").map_err(output_err)?;
    Ok(())
}

fn load_models(dir: Option<&Path>, mode: SolveMode) -> Result<Option<CascadeModelSet>, CliError> {
    match (dir, mode) {
        (_, SolveMode::Default) => Ok(None),
        (Some(d), _) => Ok(Some(CascadeModelSet::load_dir(d)?)),
        (None, _) => Err(CliError::Usage(format!("--mode {} requires --models <dir>", mode.as_str()))),
    }
}

fn summary_line(r: &SolveReport) -> String {
    format!(
        "mode={} converged={} iterations={} residual={:.3e} wall_s={:.6} advisor={} timeline={}",
        r.mode.as_str(),
        r.converged,
        r.iterations,
        r.final_residual.unwrap_or(f64::NAN),
        r.wall_seconds,
        serde_json::to_value(&r.advisor_outcome)
            .ok()
            .map(|v| match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            })
            .unwrap_or_default(),
        crate::bench::timeline_text(r)
    )
}

fn solve(
    path: &Path,
    g: &GmresArgs,
    mode: SolveMode,
    models: Option<&Path>,
    dir: Option<&Path>,
    workers: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let params = g.params();
    params.validate()?;
    let models = load_models(models, mode)?;
    let m = load_matrix(path)?;
    let name = matrix_name(path);
    let b = params.rhs(&m);
    let mut report = solve_with_mode(mode, &m, &b, &params, models.as_ref(), &SolveOptions::with_workers(workers))?;
    report.matrix = Some(name.clone());
    writeln!(out, "{}", summary_line(&report)).map_err(output_err)?;
    if let Some(dir) = dir {
        ensure_dir(dir)?;
        let file = dir.join(format!("{name}.{}.json", mode.as_str()));
        write_file(&file, &report.to_json())?;
        writeln!(out, "wrote {}", file.display()).map_err(output_err)?;
    }
    if !report.converged {
        return Err(CliError::Numerical(format!(
            "not converged after {} iterations",
            report.iterations
        )));
    }
    Ok(())
}

fn compare(
    path: &Path,
    g: &GmresArgs,
    models: &Path,
    dir: Option<&Path>,
    workers: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let params = g.params();
    params.validate()?;
    let models = CascadeModelSet::load_dir(models)?;
    let m = load_matrix(path)?;
    let name = matrix_name(path);
    let b = params.rhs(&m);
    let mut c = compare_solvers(&m, &b, &params, &models, &SolveOptions::with_workers(workers))?;
    c.set_matrix(&name);
    write!(out, "{}", c.render()).map_err(output_err)?;
    if let Some(dir) = dir {
        ensure_dir(dir)?;
        let file = dir.join(format!("{name}.compare.json"));
        write_file(&file, &serde_json::to_string_pretty(&c).expect("report serializes"))?;
        writeln!(out, "wrote {}", file.display()).map_err(output_err)?;
    }
    if c.reports().iter().any(|r| !r.converged) {
        return Err(CliError::Numerical("at least one solver did not converge".into()));
    }
    Ok(())
}

fn report(dir: &Path, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = load_reports(dir).map_err(|e| CliError::Input(e.to_string()))?;
    let rows = summarize(&reports);
    write!(out, "{}", render_summary(&rows)).map_err(output_err)?;
    if let Some(d) = out_dir {
        ensure_dir(d)?;
        let file = d.join("summary.csv");
        write_summary_csv(&rows, &file).map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
        writeln!(out, "wrote {}", file.display()).map_err(output_err)?;
    }
    Ok(())
}
