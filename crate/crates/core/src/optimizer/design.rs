use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::model::MultivariateSeries;

/// Regression form of the TVAR fit.
///
/// Row `k` (target instant `t = L+1+k`) holds `x_tᵀ = [y_{t−1}ᵀ … y_{t−L}ᵀ]`
/// in `regressors` and `y_tᵀ` in `targets`. The block-diagonal `Z` of the
/// matrix form has exactly these rows as its diagonal blocks, so only the
/// rows are stored. Rows with `mask[k] == false` are excluded from the fit
/// but their samples still serve as regressors for other rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    order: usize,
    num_nodes: usize,
    num_samples: usize,
    regressors: DMatrix<f64>,
    targets: DMatrix<f64>,
    mask: Vec<bool>,
}

impl DesignMatrices {
    pub fn build(series: &MultivariateSeries, order: usize) -> Result<Self> {
        let (p, t) = (series.num_nodes(), series.len());
        if order == 0 {
            return invalid("model order must be positive");
        }
        if t <= order {
            return invalid(format!("need T > L, got T = {t}, L = {order}"));
        }
        let k = t - order;
        let y = series.values();
        let mut regressors = DMatrix::zeros(k, p * order);
        let mut targets = DMatrix::zeros(k, p);
        for row in 0..k {
            // target instant (0-based column) is order + row
            let col = order + row;
            for l in 0..order {
                for j in 0..p {
                    regressors[(row, l * p + j)] = y[(j, col - 1 - l)];
                }
            }
            for i in 0..p {
                targets[(row, i)] = y[(i, col)];
            }
        }
        Ok(Self {
            order,
            num_nodes: p,
            num_samples: t,
            regressors,
            targets,
            mask: vec![true; k],
        })
    }

    /// Same design with a row mask (one flag per target instant).
    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.num_targets() {
            return invalid(format!("mask has {} entries for {} targets", mask.len(), self.num_targets()));
        }
        Ok(Self { mask, ..self.clone() })
    }

    /// Same regressors with every target multiplied by `alpha`.
    pub fn with_scaled_targets(&self, alpha: f64) -> Self {
        Self { targets: &self.targets * alpha, ..self.clone() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_targets(&self) -> usize {
        self.num_samples - self.order
    }

    pub fn first_target(&self) -> usize {
        self.order + 1
    }

    pub fn regressors(&self) -> &DMatrix<f64> {
        &self.regressors
    }

    pub fn targets(&self) -> &DMatrix<f64> {
        &self.targets
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// The explicit block-diagonal `Z` (`(T−L) × (T−L)·PL`).
    pub fn dense_z(&self) -> DMatrix<f64> {
        let k = self.num_targets();
        let pl = self.order * self.num_nodes;
        let mut z = DMatrix::zeros(k, k * pl);
        for row in 0..k {
            z.view_mut((row, row * pl), (1, pl)).copy_from(&self.regressors.row(row));
        }
        z
    }
}
