use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::design::DesignMatrices;
use super::stack::{edge_group, CoefficientStack};
use crate::error::{invalid, Result};
use crate::windowing::WindowPartition;

/// Grouping used by the fused (difference) penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FusionGroups {
    /// One group per edge filter: changes are local to edges.
    #[default]
    PerEdge,
    /// One group per whole block: any change is simultaneous across edges.
    WholeBlock,
}

/// Regularization weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    /// Edge-sparsity weight.
    pub lambda: f64,
    /// Fusion weight.
    pub gamma: f64,
    pub fusion: FusionGroups,
}

impl Penalty {
    pub fn local(lambda: f64, gamma: f64) -> Self {
        Self { lambda, gamma, fusion: FusionGroups::PerEdge }
    }

    /// Single-parameter global fusion: `λ Σ_n ‖B_n+1 − B_n‖_F`, no sparsity.
    pub fn global_fused(lambda: f64) -> Self {
        Self { lambda: 0.0, gamma: lambda, fusion: FusionGroups::WholeBlock }
    }

    pub fn value(&self, stack: &CoefficientStack) -> f64 {
        let fused = match self.fusion {
            FusionGroups::PerEdge => group_total_variation(stack),
            FusionGroups::WholeBlock => whole_block_fusion(stack),
        };
        let sparse = if self.lambda == 0.0 { 0.0 } else { self.lambda * group_lasso(stack) };
        let fused = if self.gamma == 0.0 { 0.0 } else { self.gamma * fused };
        sparse + fused
    }
}

/// `Ω_GL(B) = Σ_n Σ_ij ‖b_ij,n‖₂`.
pub fn group_lasso(stack: &CoefficientStack) -> f64 {
    let (p, l) = (stack.num_nodes(), stack.order());
    stack
        .blocks()
        .iter()
        .map(|b| {
            let mut s = 0.0;
            for i in 0..p {
                for j in 0..p {
                    s += edge_group(b, p, l, i, j).norm();
                }
            }
            s
        })
        .sum()
}

/// `Ω_GTV(B) = Σ_n Σ_ij ‖b_ij,n+1 − b_ij,n‖₂`, evaluated filter by filter.
pub fn group_total_variation(stack: &CoefficientStack) -> f64 {
    let (p, l) = (stack.num_nodes(), stack.order());
    let mut s = 0.0;
    for n in 1..stack.len() {
        for i in 0..p {
            for j in 0..p {
                let cur = edge_group(&stack.blocks()[n], p, l, i, j);
                let prev = edge_group(&stack.blocks()[n - 1], p, l, i, j);
                s += (cur - prev).norm();
            }
        }
    }
    s
}

/// `Σ_n ‖B_n+1 − B_n‖_F`.
pub fn whole_block_fusion(stack: &CoefficientStack) -> f64 {
    stack.blocks().windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

/// `DB`: block differences `B_n+1 − B_n`, one fewer block than `B`.
pub fn difference(stack: &CoefficientStack) -> Vec<DMatrix<f64>> {
    stack.blocks().windows(2).map(|w| &w[1] - &w[0]).collect()
}

/// Group soft-thresholding: `0` if `‖v‖ ≤ κ`, else `(1 − κ/‖v‖)·v`.
pub fn prox_group_l2(v: &DVector<f64>, kappa: f64) -> DVector<f64> {
    let norm = v.norm();
    if norm <= kappa {
        DVector::zeros(v.len())
    } else {
        v * (1.0 - kappa / norm)
    }
}

/// Applies group soft-thresholding to every edge group of `block` in place.
pub(crate) fn shrink_edge_groups(block: &mut DMatrix<f64>, p: usize, order: usize, kappa: f64) {
    if kappa == 0.0 {
        return;
    }
    for i in 0..p {
        for j in 0..p {
            let mut sq = 0.0;
            for l in 0..order {
                sq += block[(l * p + j, i)] * block[(l * p + j, i)];
            }
            let norm = sq.sqrt();
            let factor = if norm <= kappa { 0.0 } else { 1.0 - kappa / norm };
            for l in 0..order {
                block[(l * p + j, i)] *= factor;
            }
        }
    }
}

pub(crate) fn shrink_whole_block(block: &mut DMatrix<f64>, kappa: f64) {
    if kappa == 0.0 {
        return;
    }
    let norm = block.norm();
    if norm <= kappa {
        block.fill(0.0);
    } else {
        *block *= 1.0 - kappa / norm;
    }
}

/// `½ Σ_{t unmasked} ‖y_t − B_{n(t)}ᵀ x_t‖² + penalty(B)`, with residuals
/// computed row by row from the design.
pub fn objective_value(
    design: &DesignMatrices,
    partition: &WindowPartition,
    stack: &CoefficientStack,
    penalty: &Penalty,
) -> Result<f64> {
    if stack.len() != partition.num_windows() {
        return invalid(format!("{} blocks for {} windows", stack.len(), partition.num_windows()));
    }
    if stack.num_nodes() != design.num_nodes() || stack.order() != design.order() {
        return invalid("stack and design disagree on (P, L)");
    }
    let x = design.regressors();
    let y = design.targets();
    let mut fit = 0.0;
    for (k, &n) in partition.block_of_targets().iter().enumerate() {
        if !design.mask()[k] {
            continue;
        }
        let pred = stack.blocks()[n].tr_mul(&x.row(k).transpose());
        fit += (y.row(k).transpose() - pred).norm_squared();
    }
    Ok(0.5 * fit + penalty.value(stack))
}
