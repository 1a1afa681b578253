use nalgebra::DMatrix;

use super::penalty::Penalty;
use super::stack::{edge_group, CoefficientStack};

/// Sufficient statistics of the (possibly windowed, possibly masked) fit:
/// per-block `G_n = Σ x_t x_tᵀ` and `R_n = Σ x_t y_tᵀ`, plus `Σ ‖y_t‖²`.
///
/// The unwindowed problem is the special case of one block per target.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProblem {
    num_nodes: usize,
    order: usize,
    grams: Vec<DMatrix<f64>>,
    cross: Vec<DMatrix<f64>>,
    target_energy: f64,
    rows: Vec<usize>,
}

impl BlockProblem {
    pub(crate) fn new(
        num_nodes: usize,
        order: usize,
        grams: Vec<DMatrix<f64>>,
        cross: Vec<DMatrix<f64>>,
        target_energy: f64,
        rows: Vec<usize>,
    ) -> Self {
        Self { num_nodes, order, grams, cross, target_energy, rows }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_blocks(&self) -> usize {
        self.grams.len()
    }

    pub fn grams(&self) -> &[DMatrix<f64>] {
        &self.grams
    }

    pub fn cross(&self) -> &[DMatrix<f64>] {
        &self.cross
    }

    /// `Σ ‖y_t‖²` over the rows in the fit.
    pub fn target_energy(&self) -> f64 {
        self.target_energy
    }

    /// Number of fitted rows per block.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// `½‖Y − ZB‖²_F` expanded through the Gram statistics.
    pub fn fit_value(&self, stack: &CoefficientStack) -> f64 {
        let mut quad = 0.0;
        let mut lin = 0.0;
        for ((b, g), r) in stack.blocks().iter().zip(&self.grams).zip(&self.cross) {
            quad += b.dot(&(g * b));
            lin += b.dot(r);
        }
        (0.5 * (self.target_energy - 2.0 * lin + quad)).max(0.0)
    }

    pub fn objective(&self, stack: &CoefficientStack, penalty: &Penalty) -> f64 {
        self.fit_value(stack) + penalty.value(stack)
    }

    /// `max_n,ij ‖r_ij,n‖₂`: the gradient of the fit at `B = 0`, measured
    /// per edge group. Any `λ` above it gives the all-zero solution when
    /// `γ = 0`.
    pub fn cross_group_scale(&self) -> f64 {
        let (p, l) = (self.num_nodes, self.order);
        let mut m = 0.0_f64;
        for r in &self.cross {
            for i in 0..p {
                for j in 0..p {
                    m = m.max(edge_group(r, p, l, i, j).norm());
                }
            }
        }
        m
    }

    /// `max_n ‖R_n‖_F`, the analogue of [`Self::cross_group_scale`] for
    /// whole-block groups.
    pub fn cross_block_scale(&self) -> f64 {
        self.cross.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// `‖ZᵀY‖_∞` (largest absolute entry).
    pub fn cross_max_abs(&self) -> f64 {
        self.cross.iter().flat_map(|r| r.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
