use std::fs;
use std::path::{Path, PathBuf};

use dynnet::analysis::{baseline_global_solve, evaluate, norm_trajectories, EvaluationOptions};
use dynnet::optimizer::{AdmmConfig, DesignMatrices, SolveReport};
use dynnet::selection::{grid_search, make_cv_plan, Criterion, GridPoint, GridSpec};
use dynnet::simulator::{generate, GeneratorConfig};
use dynnet::windowing::{solve_windowed, WindowPartition};
use dynnet::TvarCoefficients;
use log::info;
use serde::Serialize;

use crate::args::{CvArgs, EvaluateArgs, FitArgs, ModelArgs, ReportArgs, SimulateArgs};
use crate::error::{CliError, Result};
use crate::formats;

fn default_report_path(out: &Path) -> PathBuf {
    out.with_extension("report.json")
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg: GeneratorConfig = match &args.config {
        Some(path) => formats::read_json(path)?,
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let (truth, series) = generate(&cfg)?;
    let dir = &args.out_dir;
    formats::write_json(&dir.join("config.json"), &cfg)?;
    formats::write_series(&dir.join("series.csv"), &series)?;
    formats::write_coefficients(&dir.join("truth.json"), &truth.coeffs)?;
    formats::write_breakpoints(&dir.join("breakpoints.csv"), &truth.breakpoints)?;
    formats::write_rescales(&dir.join("rescales.csv"), &truth.rescales)?;
    info!(
        "simulated {}×{} series with {} breakpoints into {}",
        series.num_nodes(),
        series.len(),
        truth.breakpoints.len(),
        dir.display()
    );
    Ok(())
}

fn load_problem(model: &ModelArgs) -> Result<(DesignMatrices, WindowPartition)> {
    let series = formats::read_series(&model.series)?;
    let design = DesignMatrices::build(&series, model.order)?;
    let partition = WindowPartition::uniform(model.order, series.len(), model.window_len)?;
    Ok((design, partition))
}

fn fit_at(
    design: &DesignMatrices,
    partition: &WindowPartition,
    criterion: Criterion,
    point: GridPoint,
    base: &AdmmConfig,
) -> Result<(TvarCoefficients, SolveReport)> {
    base.with_penalty(criterion.penalty(point)).validate()?;
    match criterion {
        Criterion::GlobalFused => Ok(baseline_global_solve(design, partition, point.lambda, base)?),
        Criterion::Local => {
            let (coeffs, out) = solve_windowed(design, partition, &base.with_penalty(criterion.penalty(point)), None)?;
            Ok((coeffs, out.report))
        }
    }
}

/// Writes the estimate and its report, then fails if the solver gave up.
fn write_fit(coeffs: &TvarCoefficients, report: &SolveReport, out: &Path, report_path: &Path) -> Result<()> {
    formats::write_coefficients(out, coeffs)?;
    formats::write_json(report_path, report)?;
    if !report.converged {
        return Err(CliError::NotConverged { iterations: report.iterations, report: report_path.into() });
    }
    info!("converged in {} iterations, objective {:.6e}", report.iterations, report.objective);
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let (design, partition) = load_problem(&args.model)?;
    let criterion = if args.baseline { Criterion::GlobalFused } else { Criterion::Local };
    let point = GridPoint { lambda: args.lambda, gamma: args.gamma };
    let (coeffs, report) = fit_at(&design, &partition, criterion, point, &args.solver.config())?;
    let report_path = args.report.clone().unwrap_or_else(|| default_report_path(&args.out));
    write_fit(&coeffs, &report, &args.out, &report_path)
}

#[derive(Serialize)]
struct BestPoint {
    lambda: f64,
    gamma: f64,
    score: f64,
    criterion: Criterion,
    num_folds: usize,
    on_boundary: bool,
    unconverged_fits: usize,
}

pub fn cv(args: &CvArgs) -> Result<()> {
    let (design, partition) = load_problem(&args.model)?;
    let criterion = if args.baseline { Criterion::GlobalFused } else { Criterion::Local };
    let plan = make_cv_plan(args.model.order, design.num_samples(), args.folds)?;
    let grid = match &args.grid {
        Some(path) => formats::read_grid(path)?,
        None => GridSpec::default_for(&design, &partition, criterion, args.grid_size, args.grid_decades)?,
    };
    let base = args.solver.config();
    base.validate()?;
    let result = grid_search(&design, &partition, &grid, &plan, criterion, &base)?;
    formats::write_score_table(&args.table_out, &result.table)?;
    let best = BestPoint {
        lambda: result.best.lambda,
        gamma: if args.baseline { 0.0 } else { result.best.gamma },
        score: result.best_score,
        criterion,
        num_folds: args.folds,
        on_boundary: result.on_boundary,
        unconverged_fits: result.unconverged_fits,
    };
    formats::write_json(&args.best_out, &best)?;
    info!("selected λ = {:.6e}, γ = {:.6e} (score {:.6e})", best.lambda, best.gamma, best.score);

    if let Some(out) = &args.fit_out {
        let point = GridPoint { lambda: best.lambda, gamma: best.gamma };
        let (coeffs, report) = fit_at(&design, &partition, criterion, point, &base)?;
        let report_path = args.report.clone().unwrap_or_else(|| default_report_path(out));
        write_fit(&coeffs, &report, out, &report_path)?;
    }
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> Result<()> {
    let est = formats::read_coefficients(&args.estimate)?;
    let truth = formats::read_coefficients(&args.truth)?;
    let series = args.series.as_deref().map(formats::read_series).transpose()?;
    let opts = EvaluationOptions { zero_tol: args.zero_tol, detection_tol: args.detect_tol, time_tol: args.time_tol };
    let metrics = evaluate(&est, &truth, series.as_ref(), &opts)?;
    formats::write_json(&args.out, &metrics)
}

pub fn report(args: &ReportArgs) -> Result<()> {
    let est = formats::read_coefficients(&args.estimate)?;
    formats::write_norm_report(&args.out, est.order(), &norm_trajectories(&est))
}
