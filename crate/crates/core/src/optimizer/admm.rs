//! Scaled-form ADMM for
//!
//! ```text
//! min ½‖Y − ZB‖²_F + λ Ω_GL(C) + γ Ω_GL(Θ)   s.t.  DB = Θ,  B = C
//! ```
//!
//! Each iteration performs
//!
//! 1. `B ← (ZᵀZ/ρ + I + DᵀD)⁻¹ (ZᵀY/ρ + C − V + Dᵀ(Θ − U))`
//! 2. `θ_ij,n ← prox_{γ/ρ}(b_ij,n+1 − b_ij,n + u_ij,n)`
//! 3. `c_ij,n ← prox_{λ/ρ}(b_ij,n + v_ij,n)`
//! 4. `U ← U + DB − Θ`, `V ← V + B − C`
//!
//! The reported solution is the `C` iterate, which is exactly group sparse.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::block_solve::BlockTridiagonalFactor;
use super::design::DesignMatrices;
use super::penalty::{shrink_edge_groups, shrink_whole_block, FusionGroups, Penalty};
use super::problem::BlockProblem;
use super::stack::CoefficientStack;
use crate::error::{invalid, Error, Result};
use crate::windowing::{collapse_problem, WindowPartition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub gamma: f64,
    pub fusion: FusionGroups,
    pub rho: f64,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iters: usize,
    /// Residual balancing: double or halve `ρ` when one residual exceeds
    /// the other tenfold.
    pub adaptive_rho: bool,
}

impl Default for AdmmConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            gamma: 0.0,
            fusion: FusionGroups::PerEdge,
            rho: 1.0,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            max_iters: 5000,
            adaptive_rho: false,
        }
    }
}

impl AdmmConfig {
    pub fn with_penalty(mut self, penalty: Penalty) -> Self {
        self.lambda = penalty.lambda;
        self.gamma = penalty.gamma;
        self.fusion = penalty.fusion;
        self
    }

    pub fn penalty(&self) -> Penalty {
        Penalty { lambda: self.lambda, gamma: self.gamma, fusion: self.fusion }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be finite and nonnegative");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be finite and nonnegative");
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.eps_abs > 0.0) || !(self.eps_rel > 0.0) {
            return bad("stopping tolerances must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        Ok(())
    }
}

/// Primal blocks, splitting variables and scaled duals.
///
/// `theta` and `u` have one block fewer than `b`, `c` and `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub b: Vec<DMatrix<f64>>,
    pub theta: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
    pub u: Vec<DMatrix<f64>>,
    pub v: Vec<DMatrix<f64>>,
    pub rho: f64,
    pub iterations: usize,
    pub residuals: Residuals,
}

impl AdmmState {
    pub fn zeros(problem: &BlockProblem, rho: f64) -> Self {
        let (p, l, n) = (problem.num_nodes(), problem.order(), problem.num_blocks());
        let z = DMatrix::zeros(p * l, p);
        Self {
            b: vec![z.clone(); n],
            theta: vec![z.clone(); n.saturating_sub(1)],
            c: vec![z.clone(); n],
            u: vec![z.clone(); n.saturating_sub(1)],
            v: vec![z; n],
            rho,
            iterations: 0,
            residuals: Residuals::default(),
        }
    }

    fn check_shapes(&self, problem: &BlockProblem) -> Result<()> {
        let n = problem.num_blocks();
        let shape = (problem.num_nodes() * problem.order(), problem.num_nodes());
        let ok = self.b.len() == n
            && self.c.len() == n
            && self.v.len() == n
            && self.theta.len() == n.saturating_sub(1)
            && self.u.len() == n.saturating_sub(1)
            && [&self.b, &self.c, &self.v, &self.theta, &self.u]
                .iter()
                .all(|blocks| blocks.iter().all(|m| m.shape() == shape));
        if ok {
            Ok(())
        } else {
            invalid("warm-start state does not match the problem shape")
        }
    }

    /// Rescales the scaled duals after a change of `ρ`.
    fn set_rho(&mut self, rho: f64) {
        let f = self.rho / rho;
        self.u.iter_mut().chain(self.v.iter_mut()).for_each(|m| *m *= f);
        self.rho = rho;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
}

impl Residuals {
    pub fn converged(&self) -> bool {
        self.primal <= self.primal_tolerance && self.dual <= self.dual_tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub primal_tolerance: f64,
    pub dual_tolerance: f64,
    /// Objective at the `C` iterate after the first iteration.
    pub initial_objective: f64,
    /// Objective at the returned `C` iterate.
    pub objective: f64,
    pub final_rho: f64,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub solution: CoefficientStack,
    pub report: SolveReport,
    pub state: AdmmState,
}

fn sum_sq(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|m| m.norm_squared()).sum()
}

/// `Dᵀ W` for a stack of `N − 1` difference blocks.
fn difference_adjoint(w: &[DMatrix<f64>], n: usize, shape: (usize, usize)) -> Vec<DMatrix<f64>> {
    (0..n)
        .map(|k| {
            let mut out = match k.checked_sub(1).and_then(|prev| w.get(prev)) {
                Some(prev) => prev.clone(),
                None => DMatrix::zeros(shape.0, shape.1),
            };
            if let Some(cur) = w.get(k) {
                out -= cur;
            }
            out
        })
        .collect()
}

/// Standard scaled-form residuals for the constraint `[D; I] B − [Θ; C] = 0`:
///
/// - primal `‖(DB − Θ; B − C)‖_F`
/// - dual `ρ ‖Dᵀ(Θ − Θ_prev) + (C − C_prev)‖_F`
///
/// with tolerances `√m·ε_abs + ε_rel·max(‖(DB; B)‖, ‖(Θ; C)‖)` and
/// `√n·ε_abs + ε_rel·ρ‖DᵀU + V‖`.
#[allow(clippy::too_many_arguments)]
pub fn compute_residuals(
    b: &[DMatrix<f64>],
    theta: &[DMatrix<f64>],
    c: &[DMatrix<f64>],
    u: &[DMatrix<f64>],
    v: &[DMatrix<f64>],
    theta_prev: &[DMatrix<f64>],
    c_prev: &[DMatrix<f64>],
    rho: f64,
    eps_abs: f64,
    eps_rel: f64,
) -> Residuals {
    let n = b.len();
    let db: Vec<DMatrix<f64>> = b.windows(2).map(|w| &w[1] - &w[0]).collect();
    let mut primal_sq = 0.0;
    for (d, t) in db.iter().zip(theta) {
        primal_sq += (d - t).norm_squared();
    }
    for (bb, cc) in b.iter().zip(c) {
        primal_sq += (bb - cc).norm_squared();
    }

    let dtheta: Vec<DMatrix<f64>> = theta.iter().zip(theta_prev).map(|(a, b)| a - b).collect();
    let shape = b.first().map_or((0, 0), |m| m.shape());
    let adj = difference_adjoint(&dtheta, n, shape);
    let dual_sq: f64 = adj
        .iter()
        .zip(c.iter().zip(c_prev))
        .map(|(a, (cn, cp))| (a + cn - cp).norm_squared())
        .sum();

    let adj_u = difference_adjoint(u, n, shape);
    let dual_var_sq: f64 = adj_u.iter().zip(v).map(|(a, vv)| (a + vv).norm_squared()).sum();

    let block_len = b.first().map_or(0, |m| m.len());
    let m_dim = ((2 * n).saturating_sub(1) * block_len) as f64;
    let n_dim = (n * block_len) as f64;
    let ax = (sum_sq(&db) + sum_sq(b)).sqrt();
    let z = (sum_sq(theta) + sum_sq(c)).sqrt();
    Residuals {
        primal: primal_sq.sqrt(),
        dual: rho * dual_sq.sqrt(),
        primal_tolerance: m_dim.sqrt() * eps_abs + eps_rel * ax.max(z),
        dual_tolerance: n_dim.sqrt() * eps_abs + eps_rel * rho * dual_var_sq.sqrt(),
    }
}

/// Exact solution of the B-update system for the current splitting
/// variables and duals.
pub fn b_update(problem: &BlockProblem, factor: &BlockTridiagonalFactor, state: &AdmmState) -> Vec<DMatrix<f64>> {
    let n = problem.num_blocks();
    let w: Vec<DMatrix<f64>> = state.theta.iter().zip(&state.u).map(|(t, u)| t - u).collect();
    let shape = (problem.num_nodes() * problem.order(), problem.num_nodes());
    let adj = if n > 1 { difference_adjoint(&w, n, shape) } else { Vec::new() };
    let rhs: Vec<DMatrix<f64>> = (0..n)
        .map(|k| {
            let mut r = &problem.cross()[k] / state.rho + &state.c[k] - &state.v[k];
            if let Some(a) = adj.get(k) {
                r += a;
            }
            r
        })
        .collect();
    factor.solve(&rhs)
}

/// Runs ADMM from zero or from a warm start.
pub fn admm_solve(problem: &BlockProblem, cfg: &AdmmConfig, init: Option<AdmmState>) -> Result<AdmmOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let (p, l, n) = (problem.num_nodes(), problem.order(), problem.num_blocks());
    let penalty = cfg.penalty();

    let mut state = match init {
        Some(s) => {
            s.check_shapes(problem)?;
            let mut s = s;
            if s.rho != cfg.rho {
                s.set_rho(cfg.rho);
            }
            s
        }
        None => AdmmState::zeros(problem, cfg.rho),
    };
    state.iterations = 0;
    let mut factor = BlockTridiagonalFactor::new(problem.grams(), state.rho)?;
    let mut initial_objective = f64::NAN;
    let mut converged = false;

    for iter in 1..=cfg.max_iters {
        let theta_prev = state.theta.clone();
        let c_prev = state.c.clone();

        state.b = b_update(problem, &factor, &state);
        if state.b.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite { iteration: iter });
        }

        let kappa_fused = cfg.gamma / state.rho;
        for k in 0..n.saturating_sub(1) {
            let mut t = &state.b[k + 1] - &state.b[k] + &state.u[k];
            match cfg.fusion {
                FusionGroups::PerEdge => shrink_edge_groups(&mut t, p, l, kappa_fused),
                FusionGroups::WholeBlock => shrink_whole_block(&mut t, kappa_fused),
            }
            state.theta[k] = t;
        }
        let kappa_sparse = cfg.lambda / state.rho;
        for k in 0..n {
            let mut c = &state.b[k] + &state.v[k];
            shrink_edge_groups(&mut c, p, l, kappa_sparse);
            state.c[k] = c;
        }

        for k in 0..n.saturating_sub(1) {
            let d = &state.b[k + 1] - &state.b[k];
            state.u[k] += d - &state.theta[k];
        }
        for k in 0..n {
            state.v[k] += &state.b[k] - &state.c[k];
        }

        state.residuals = compute_residuals(
            &state.b,
            &state.theta,
            &state.c,
            &state.u,
            &state.v,
            &theta_prev,
            &c_prev,
            state.rho,
            cfg.eps_abs,
            cfg.eps_rel,
        );
        state.iterations = iter;
        if iter == 1 {
            let c = CoefficientStack::from_blocks(p, l, state.c.clone())?;
            initial_objective = problem.objective(&c, &penalty);
        }
        if state.residuals.converged() {
            converged = true;
            break;
        }
        if cfg.adaptive_rho && iter % 10 == 0 {
            let r = state.residuals;
            let new_rho = if r.primal > 10.0 * r.dual {
                Some(state.rho * 2.0)
            } else if r.dual > 10.0 * r.primal {
                Some(state.rho / 2.0)
            } else {
                None
            };
            if let Some(rho) = new_rho {
                state.set_rho(rho);
                factor = BlockTridiagonalFactor::new(problem.grams(), rho)?;
            }
        }
    }

    let solution = CoefficientStack::from_blocks(p, l, state.c.clone())?;
    let objective = problem.objective(&solution, &penalty);
    let report = SolveReport {
        iterations: state.iterations,
        converged,
        primal_residual: state.residuals.primal,
        dual_residual: state.residuals.dual,
        primal_tolerance: state.residuals.primal_tolerance,
        dual_tolerance: state.residuals.dual_tolerance,
        initial_objective,
        objective,
        final_rho: state.rho,
        wall_time: started.elapsed(),
    };
    Ok(AdmmOutcome { solution, report, state })
}

/// Unwindowed solve: one coefficient block per target instant.
pub fn admm_solve_design(design: &DesignMatrices, cfg: &AdmmConfig, init: Option<AdmmState>) -> Result<AdmmOutcome> {
    let partition = WindowPartition::singletons(design.order(), design.num_samples())?;
    admm_solve(&collapse_problem(design, &partition)?, cfg, init)
}
