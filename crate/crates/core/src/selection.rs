//! Interleaved M-fold cross-validation and grid search over `(λ, γ)`.
//!
//! Fold `m` validates the targets with `t mod M = m` and trains on all the
//! others. Every sample stays available as a regressor in every fold; only
//! residual rows are masked.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::optimizer::{admm_solve, AdmmConfig, AdmmState, CoefficientStack, DesignMatrices, Penalty};
use crate::windowing::{collapse_problem, WindowPartition};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvPlan {
    num_folds: usize,
    first_target: usize,
    last_target: usize,
}

/// Interleaved folds over the targets `[L+1, T]`.
pub fn make_cv_plan(order: usize, num_samples: usize, num_folds: usize) -> Result<CvPlan> {
    if num_folds < 2 {
        return invalid(format!("need at least 2 folds, got {num_folds}"));
    }
    if num_samples <= order || num_samples - order < num_folds {
        return invalid(format!(
            "{} targets cannot fill {num_folds} folds",
            num_samples.saturating_sub(order)
        ));
    }
    Ok(CvPlan { num_folds, first_target: order + 1, last_target: num_samples })
}

impl CvPlan {
    pub fn num_folds(&self) -> usize {
        self.num_folds
    }

    /// `{t ∈ [L+1, T] : t mod M = m}`.
    pub fn validation_targets(&self, fold: usize) -> Vec<usize> {
        (self.first_target..=self.last_target)
            .filter(|t| t % self.num_folds == fold)
            .collect()
    }

    /// One flag per target row; `true` for rows used in training.
    pub fn training_mask(&self, fold: usize) -> Vec<bool> {
        (self.first_target..=self.last_target)
            .map(|t| t % self.num_folds != fold)
            .collect()
    }
}

/// Which criterion a grid point parameterizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Edge sparsity `λ` plus per-edge fusion `γ`.
    #[default]
    Local,
    /// Whole-block fusion only; `λ` is the fusion weight and `γ` is ignored.
    GlobalFused,
}

impl Criterion {
    pub fn penalty(&self, point: GridPoint) -> Penalty {
        match self {
            Criterion::Local => Penalty::local(point.lambda, point.gamma),
            Criterion::GlobalFused => Penalty::global_fused(point.lambda),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    points: Vec<GridPoint>,
}

impl GridSpec {
    /// Cartesian product of the candidate lists.
    pub fn from_axes(lambdas: &[f64], gammas: &[f64]) -> Result<Self> {
        let points = lambdas
            .iter()
            .flat_map(|&lambda| gammas.iter().map(move |&gamma| GridPoint { lambda, gamma }))
            .collect();
        Self::from_points(points)
    }

    pub fn from_points(points: Vec<GridPoint>) -> Result<Self> {
        if points.is_empty() {
            return invalid("grid is empty");
        }
        for p in &points {
            if !(p.lambda > 0.0 && p.lambda.is_finite()) || !(p.gamma >= 0.0 && p.gamma.is_finite()) {
                return invalid(format!("grid point ({}, {}) must have λ > 0 and γ ≥ 0", p.lambda, p.gamma));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    /// Points sorted ascending by `(λ, γ)` with duplicates removed.
    pub fn canonical(&self) -> Vec<GridPoint> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.gamma.total_cmp(&b.gamma)));
        pts.dedup();
        pts
    }

    /// `count` log-spaced values from `scale·10^(−decades)` to `scale`.
    pub fn log_axis(scale: f64, decades: f64, count: usize) -> Vec<f64> {
        match count {
            0 => vec![],
            1 => vec![scale],
            _ => (0..count)
                .map(|k| scale * 10f64.powf(-decades + decades * k as f64 / (count - 1) as f64))
                .collect(),
        }
    }

    /// Default grid: `count` log-spaced values over `decades` decades below
    /// the zero-solution scale of the full-data windowed problem, for each
    /// parameter. The global-fusion criterion gets a λ-only grid.
    pub fn default_for(
        design: &DesignMatrices,
        partition: &WindowPartition,
        criterion: Criterion,
        count: usize,
        decades: f64,
    ) -> Result<Self> {
        let problem = collapse_problem(design, partition)?;
        match criterion {
            Criterion::Local => {
                let axis = Self::log_axis(problem.cross_group_scale(), decades, count);
                Self::from_axes(&axis, &axis)
            }
            Criterion::GlobalFused => {
                let axis = Self::log_axis(problem.cross_block_scale(), decades, count);
                Self::from_axes(&axis, &[0.0])
            }
        }
    }
}

/// Mean over `targets` of `‖y_t − Σ_ℓ Ã⁽ℓ⁾_{n(t)} y_{t−ℓ}‖²`.
pub fn mean_squared_residual(
    design: &DesignMatrices,
    partition: &WindowPartition,
    stack: &CoefficientStack,
    targets: &[usize],
) -> Result<f64> {
    if targets.is_empty() {
        return invalid("no targets to score");
    }
    let mut total = 0.0;
    for &t in targets {
        let n = partition.window_index(t)?;
        let k = t - design.first_target();
        let pred = stack.blocks()[n - 1].tr_mul(&design.regressors().row(k).transpose());
        total += (design.targets().row(k).transpose() - pred).norm_squared();
    }
    Ok(total / targets.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub lambda: f64,
    pub gamma: f64,
    /// Average of the per-fold validation errors.
    pub score: f64,
    pub fold_scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: GridPoint,
    pub best_score: f64,
    /// One row per canonical grid point, ascending in `(λ, γ)`.
    pub table: Vec<ScoreRow>,
    /// Selected point sits on the edge of a multi-valued axis.
    pub on_boundary: bool,
    /// Fold fits that hit `max_iters`.
    pub unconverged_fits: usize,
}

/// Scores every point of `points` (in order) on one fold, warm-starting
/// each fit from the previous one.
fn fold_path(
    design: &DesignMatrices,
    partition: &WindowPartition,
    plan: &CvPlan,
    fold: usize,
    points: &[GridPoint],
    criterion: Criterion,
    base: &AdmmConfig,
) -> Result<(Vec<f64>, usize)> {
    let masked = design.with_mask(plan.training_mask(fold))?;
    let problem = collapse_problem(&masked, partition)?;
    let targets = plan.validation_targets(fold);
    let mut warm: Option<AdmmState> = None;
    let mut scores = Vec::with_capacity(points.len());
    let mut unconverged = 0;
    for &point in points {
        let cfg = base.with_penalty(criterion.penalty(point));
        let out = admm_solve(&problem, &cfg, warm.take())?;
        if !out.report.converged {
            unconverged += 1;
        }
        scores.push(mean_squared_residual(design, partition, &out.solution, &targets)?);
        warm = Some(out.state);
    }
    Ok((scores, unconverged))
}

/// Cross-validation error of a single grid point.
pub fn cv_score(
    design: &DesignMatrices,
    partition: &WindowPartition,
    point: GridPoint,
    plan: &CvPlan,
    criterion: Criterion,
    base: &AdmmConfig,
) -> Result<ScoreRow> {
    let fold_scores = (0..plan.num_folds())
        .into_par_iter()
        .map(|m| {
            fold_path(design, partition, plan, m, &[point], criterion, base)
                .map(|(s, _)| s[0])
                .map_err(|e| Error::Fold { fold: m, source: Box::new(e) })
        })
        .collect::<Result<Vec<f64>>>()?;
    let score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
    Ok(ScoreRow { lambda: point.lambda, gamma: point.gamma, score, fold_scores })
}

/// Evaluates every grid point and returns the minimizer.
///
/// Within a fold the path runs from the largest `λ` (then `γ`) down, each
/// fit warm-started from the previous. Ties go to the smallest `λ`, then
/// the smallest `γ`. Row order of the input grid does not matter.
pub fn grid_search(
    design: &DesignMatrices,
    partition: &WindowPartition,
    grid: &GridSpec,
    plan: &CvPlan,
    criterion: Criterion,
    base: &AdmmConfig,
) -> Result<GridSearchResult> {
    let ascending = grid.canonical();
    let path: Vec<GridPoint> = ascending.iter().rev().copied().collect();

    let per_fold = (0..plan.num_folds())
        .into_par_iter()
        .map(|m| {
            fold_path(design, partition, plan, m, &path, criterion, base)
                .map_err(|e| Error::Fold { fold: m, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>>>()?;

    let unconverged_fits = per_fold.iter().map(|(_, u)| u).sum();
    let table: Vec<ScoreRow> = ascending
        .iter()
        .enumerate()
        .map(|(k, p)| {
            // path is reversed
            let idx = path.len() - 1 - k;
            let fold_scores: Vec<f64> = per_fold.iter().map(|(s, _)| s[idx]).collect();
            let score = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            ScoreRow { lambda: p.lambda, gamma: p.gamma, score, fold_scores }
        })
        .collect();

    let mut best = 0;
    for (k, row) in table.iter().enumerate() {
        if row.score < table[best].score {
            best = k;
        }
    }
    let best_point = GridPoint { lambda: table[best].lambda, gamma: table[best].gamma };
    let on_boundary = is_on_boundary(&ascending, best_point, criterion);
    if on_boundary {
        warn!(
            "selected (λ = {:.3e}, γ = {:.3e}) lies on the grid boundary",
            best_point.lambda, best_point.gamma
        );
    }
    Ok(GridSearchResult {
        best: best_point,
        best_score: table[best].score,
        table,
        on_boundary,
        unconverged_fits,
    })
}

fn is_on_boundary(points: &[GridPoint], best: GridPoint, criterion: Criterion) -> bool {
    let edge = |values: Vec<f64>, v: f64| {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo < hi && (v == lo || v == hi)
    };
    let lambda_edge = edge(points.iter().map(|p| p.lambda).collect(), best.lambda);
    let gamma_edge = criterion == Criterion::Local && edge(points.iter().map(|p| p.gamma).collect(), best.gamma);
    lambda_edge || gamma_edge
}
