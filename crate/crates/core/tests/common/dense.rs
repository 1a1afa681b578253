//! Dense reference for the structured B-update.

use dynnet::optimizer::{b_update, AdmmState, BlockTridiagonalFactor};
use dynnet::windowing::{collapse_problem, WindowPartition};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::small_design;

pub fn randn(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Assembles `(ZᵀZ/ρ + I + DᵀD) B = ZᵀY/ρ + C − V + Dᵀ(Θ − U)` densely,
/// with `Z` mapping each target row onto its window's block.
pub fn dense_b_update(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    window_of_row: &[usize],
    n: usize,
    state: &AdmmState,
) -> DMatrix<f64> {
    let (pl, p) = (x.ncols(), y.ncols());
    let mut z = DMatrix::zeros(x.nrows(), n * pl);
    for (k, &w) in window_of_row.iter().enumerate() {
        z.view_mut((k, w * pl), (1, pl)).copy_from(&x.row(k));
    }
    let mut d = DMatrix::zeros((n - 1) * pl, n * pl);
    for m in 0..n - 1 {
        for r in 0..pl {
            d[(m * pl + r, m * pl + r)] = -1.0;
            d[(m * pl + r, (m + 1) * pl + r)] = 1.0;
        }
    }
    let stack = |blocks: &[DMatrix<f64>]| {
        let mut out = DMatrix::zeros(blocks.len() * pl, p);
        for (m, b) in blocks.iter().enumerate() {
            out.view_mut((m * pl, 0), (pl, p)).copy_from(b);
        }
        out
    };
    let rho = state.rho;
    let lhs = z.transpose() * &z / rho + DMatrix::identity(n * pl, n * pl) + d.transpose() * &d;
    let theta_minus_u = stack(&state.theta) - stack(&state.u);
    let mut rhs = z.transpose() * y / rho + stack(&state.c) - stack(&state.v);
    if n > 1 {
        rhs += d.transpose() * theta_minus_u;
    }
    lhs.lu().solve(&rhs).unwrap()
}

/// Relative error of the structured update against the dense solve on a
/// random state.
pub fn b_update_error(p: usize, l: usize, t: usize, window_len: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let design = small_design(p, l, t, seed);
    let part = WindowPartition::uniform(l, t, window_len).unwrap();
    let problem = collapse_problem(&design, &part).unwrap();
    let rho = rng.random_range(0.1..5.0);
    let mut state = AdmmState::zeros(&problem, rho);
    for m in state.theta.iter_mut().chain(state.u.iter_mut()).chain(state.c.iter_mut()).chain(state.v.iter_mut()) {
        *m = randn(p * l, p, &mut rng);
    }
    let factor = BlockTridiagonalFactor::new(problem.grams(), rho).unwrap();
    let structured = b_update(&problem, &factor, &state);

    let window_of_row: Vec<usize> = (l + 1..=t).map(|tt| part.window_index(tt).unwrap() - 1).collect();
    let dense = dense_b_update(design.regressors(), design.targets(), &window_of_row, part.num_windows(), &state);
    let pl = p * l;
    let mut err = 0.0;
    for (m, b) in structured.iter().enumerate() {
        err += (b - dense.rows(m * pl, pl)).norm_squared();
    }
    err.sqrt() / dense.norm()
}

pub const B_UPDATE_CASES: [(usize, usize, usize, usize); 10] = [
    (2, 1, 20, 1),
    (2, 2, 30, 1),
    (3, 1, 25, 1),
    (3, 2, 40, 1),
    (4, 2, 30, 1),
    (2, 2, 60, 7),
    (3, 3, 80, 10),
    (4, 1, 50, 5),
    (3, 2, 45, 4),
    (2, 3, 33, 2),
];
