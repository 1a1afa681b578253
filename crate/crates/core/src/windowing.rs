//! Windowed estimation: coefficients are held constant inside contiguous
//! windows of target instants, so the unknowns drop from `LP²(T−L)` to
//! `LP²N` for `N` windows.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::model::TvarCoefficients;
use crate::optimizer::{admm_solve, AdmmConfig, AdmmOutcome, AdmmState, BlockProblem, CoefficientStack, DesignMatrices};

/// Ordered, contiguous, disjoint windows covering `[L+1, T]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPartition {
    order: usize,
    num_samples: usize,
    window_len: usize,
    starts: Vec<usize>,
}

impl WindowPartition {
    /// Consecutive windows of `window_len` instants. The final window absorbs
    /// the remainder, so its length lies in `[window_len, 2·window_len − 1]`.
    /// A `window_len` of at least `T − L` yields a single window.
    pub fn uniform(order: usize, num_samples: usize, window_len: usize) -> Result<Self> {
        if window_len == 0 {
            return invalid("window length must be at least 1");
        }
        if num_samples <= order {
            return invalid(format!("need T > L, got T = {num_samples}, L = {order}"));
        }
        let targets = num_samples - order;
        let count = (targets / window_len).max(1);
        let starts = (0..count).map(|k| order + 1 + k * window_len).collect();
        Ok(Self { order, num_samples, window_len, starts })
    }

    /// One window per target instant.
    pub fn singletons(order: usize, num_samples: usize) -> Result<Self> {
        Self::uniform(order, num_samples, 1)
    }

    /// Arbitrary contiguous windows given by their first instants.
    pub fn from_starts(order: usize, num_samples: usize, starts: Vec<usize>) -> Result<Self> {
        if num_samples <= order {
            return invalid(format!("need T > L, got T = {num_samples}, L = {order}"));
        }
        if starts.first() != Some(&(order + 1)) {
            return invalid(format!("first window must start at L+1 = {}", order + 1));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) || *starts.last().unwrap() > num_samples {
            return invalid("window starts must be strictly increasing within [L+1, T]");
        }
        let window_len = starts.get(1).map(|s| s - starts[0]).unwrap_or(num_samples - order);
        Ok(Self { order, num_samples, window_len, starts })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    /// Nominal window length.
    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn num_windows(&self) -> usize {
        self.starts.len()
    }

    pub fn starts(&self) -> &[usize] {
        &self.starts
    }

    /// Inclusive range of window `n` (1-based).
    pub fn window(&self, n: usize) -> (usize, usize) {
        let start = self.starts[n - 1];
        let end = self.starts.get(n).map(|s| s - 1).unwrap_or(self.num_samples);
        (start, end)
    }

    pub fn windows(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.num_windows()).map(|n| self.window(n))
    }

    /// `n(t)`: the 1-based id of the window containing `t`.
    pub fn window_index(&self, t: usize) -> Result<usize> {
        if t < self.order + 1 || t > self.num_samples {
            return invalid(format!("time {t} outside [{}, {}]", self.order + 1, self.num_samples));
        }
        Ok(self.starts.partition_point(|&s| s <= t))
    }

    /// 0-based block index for every target instant `L+1..=T`.
    pub(crate) fn block_of_targets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_samples - self.order);
        for (n, (start, end)) in self.windows().enumerate() {
            out.extend(std::iter::repeat_n(n, end - start + 1));
        }
        out
    }

    /// Number of unknowns `L·P²·N` of the windowed problem.
    pub fn unknown_count(&self, num_nodes: usize) -> usize {
        self.order * num_nodes * num_nodes * self.num_windows()
    }
}

/// Builds the windowed problem: per-window Gram matrices `Σ x_t x_tᵀ` and
/// cross products `Σ x_t y_tᵀ` over the unmasked target rows of each window.
pub fn collapse_problem(design: &DesignMatrices, partition: &WindowPartition) -> Result<BlockProblem> {
    if design.order() != partition.order() || design.num_samples() != partition.num_samples() {
        return invalid(format!(
            "partition is for (L = {}, T = {}), design is for (L = {}, T = {})",
            partition.order(),
            partition.num_samples(),
            design.order(),
            design.num_samples()
        ));
    }
    let pl = design.order() * design.num_nodes();
    let p = design.num_nodes();
    let n = partition.num_windows();
    let mut grams = vec![DMatrix::zeros(pl, pl); n];
    let mut cross = vec![DMatrix::zeros(pl, p); n];
    let mut rows = vec![0usize; n];
    let mut energy = 0.0;
    let x = design.regressors();
    let y = design.targets();
    for (k, &block) in partition.block_of_targets().iter().enumerate() {
        if !design.mask()[k] {
            continue;
        }
        let xt = x.row(k).transpose();
        let yt = y.row(k);
        grams[block].ger(1.0, &xt, &xt, 1.0);
        cross[block].ger(1.0, &xt, &yt.transpose(), 1.0);
        energy += yt.norm_squared();
        rows[block] += 1;
    }
    Ok(BlockProblem::new(p, design.order(), grams, cross, energy, rows))
}

/// Per-instant view of windowed blocks: one segment per window.
pub fn expand_solution(stack: &CoefficientStack, partition: &WindowPartition) -> Result<TvarCoefficients> {
    if stack.len() != partition.num_windows() {
        return invalid(format!(
            "{} coefficient blocks for {} windows",
            stack.len(),
            partition.num_windows()
        ));
    }
    let segments = (0..stack.len()).map(|n| stack.lag_matrices(n)).collect();
    TvarCoefficients::new(partition.order(), partition.num_samples(), partition.starts().to_vec(), segments)
}

/// Collapses, solves and expands in one step.
pub fn solve_windowed(
    design: &DesignMatrices,
    partition: &WindowPartition,
    cfg: &AdmmConfig,
    init: Option<AdmmState>,
) -> Result<(TvarCoefficients, AdmmOutcome)> {
    let problem = collapse_problem(design, partition)?;
    let outcome = admm_solve(&problem, cfg, init)?;
    let coeffs = expand_solution(&outcome.solution, partition)?;
    Ok((coeffs, outcome))
}
