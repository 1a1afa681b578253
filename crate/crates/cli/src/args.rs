use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dynnet::optimizer::AdmmConfig;

#[derive(Debug, Parser)]
#[command(name = "dynnet", version, about = "Time-varying causal graphs from multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a ground-truth TVAR path and a realization of it.
    Simulate(SimulateArgs),
    /// Fit the regularized TVAR model at fixed (λ, γ).
    Fit(FitArgs),
    /// Cross-validate (λ, γ) over a grid, optionally refitting at the best point.
    Cv(CvArgs),
    /// Compare an estimate against ground-truth coefficients.
    Evaluate(EvaluateArgs),
    /// Export per-edge, per-window filter norms and taps as CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generator config JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Receives series.csv, truth.json, breakpoints.csv, rescales.csv and config.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// Autoregressive order L.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    /// Instants per coefficient window; 1 fits every instant separately.
    #[arg(long, default_value_t = 21)]
    pub window_len: usize,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = AdmmConfig::default().rho)]
    pub rho: f64,
    #[arg(long, default_value_t = AdmmConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = AdmmConfig::default().eps_abs)]
    pub tol_abs: f64,
    #[arg(long, default_value_t = AdmmConfig::default().eps_rel)]
    pub tol_rel: f64,
    /// Rebalance ρ from the residual ratio.
    #[arg(long)]
    pub adaptive_rho: bool,
}

impl SolverArgs {
    pub fn config(&self) -> AdmmConfig {
        AdmmConfig {
            rho: self.rho,
            max_iters: self.max_iters,
            eps_abs: self.tol_abs,
            eps_rel: self.tol_rel,
            adaptive_rho: self.adaptive_rho,
            ..AdmmConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Ignored with --baseline.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Fit the global-fusion baseline (λ weighs whole-block differences).
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Estimated coefficients JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Solver report JSON; defaults to `<out stem>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Number of interleaved folds M.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Grid CSV with a `lambda` column and an optional `gamma` column.
    #[arg(long, conflicts_with_all = ["grid_size", "grid_decades"])]
    pub grid: Option<PathBuf>,
    /// Values per axis of the default log grid.
    #[arg(long, default_value_t = 5)]
    pub grid_size: usize,
    /// Decades spanned below the zero-solution scale.
    #[arg(long, default_value_t = 4.0)]
    pub grid_decades: f64,
    /// Select λ for the global-fusion baseline instead.
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub table_out: PathBuf,
    #[arg(long)]
    pub best_out: PathBuf,
    /// Refit on the full series at the selected point and write the estimate here.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
    /// Report of the final fit; defaults to `<fit-out stem>.report.json`.
    #[arg(long, requires = "fit_out")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Series for the in-sample forecast NMSE.
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Breakpoint matching tolerance in instants; defaults to one window.
    #[arg(long)]
    pub time_tol: Option<usize>,
    /// Filter-jump threshold for breakpoint detection.
    #[arg(long)]
    pub detect_tol: Option<f64>,
    /// Filter norm at or below which an edge counts as absent.
    #[arg(long, default_value_t = dynnet::DEFAULT_ZERO_TOL)]
    pub zero_tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub estimate: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
