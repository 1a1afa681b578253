use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Result};
use crate::model::TvarCoefficients;
use crate::windowing::WindowPartition;

/// Coefficient blocks `B_n = [A⁽¹⁾_n, …, A⁽ᴸ⁾_n]ᵀ`, each `PL × P`.
///
/// Entry `(ℓ·P + j, i)` of a block (0-based) is `a⁽ℓ⁺¹⁾_ij`, so the filter of
/// edge `(i, j)` is column `i` restricted to rows `j, P + j, …, (L−1)P + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientStack {
    num_nodes: usize,
    order: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl CoefficientStack {
    pub fn zeros(num_nodes: usize, order: usize, num_blocks: usize) -> Self {
        Self {
            num_nodes,
            order,
            blocks: vec![DMatrix::zeros(num_nodes * order, num_nodes); num_blocks],
        }
    }

    pub fn from_blocks(num_nodes: usize, order: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        if blocks.is_empty() {
            return invalid("coefficient stack needs at least one block");
        }
        if let Some(b) = blocks.iter().find(|b| b.shape() != (num_nodes * order, num_nodes)) {
            return invalid(format!(
                "block shape {:?}, expected {}×{}",
                b.shape(),
                num_nodes * order,
                num_nodes
            ));
        }
        Ok(Self { num_nodes, order, blocks })
    }

    /// Samples the window-start value of every window. Fails if the
    /// coefficients are not constant inside some window.
    pub fn from_coefficients(coeffs: &TvarCoefficients, partition: &WindowPartition) -> Result<Self> {
        if coeffs.order() != partition.order() || coeffs.num_samples() != partition.num_samples() {
            return invalid("coefficients and partition disagree on (L, T)");
        }
        let mut blocks = Vec::with_capacity(partition.num_windows());
        for (start, end) in partition.windows() {
            let s = coeffs.segment_index(start)?;
            if coeffs.segment_index(end)? != s {
                return invalid(format!("coefficients change inside window [{start}, {end}]"));
            }
            blocks.push(block_from_lags(&coeffs.segments()[s]));
        }
        Self::from_blocks(coeffs.num_nodes(), coeffs.order(), blocks)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<DMatrix<f64>> {
        self.blocks
    }

    /// Filter `b_ij,n` (0-based block and nodes).
    pub fn edge_filter(&self, n: usize, i: usize, j: usize) -> DVector<f64> {
        edge_group(&self.blocks[n], self.num_nodes, self.order, i, j)
    }

    /// `[A⁽¹⁾_n, …, A⁽ᴸ⁾_n]` for block `n`.
    pub fn lag_matrices(&self, n: usize) -> Vec<DMatrix<f64>> {
        let p = self.num_nodes;
        (0..self.order)
            .map(|l| self.blocks[n].rows(l * p, p).transpose())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// Stacks `[A⁽¹⁾, …, A⁽ᴸ⁾]ᵀ` into one `PL × P` block.
pub(crate) fn block_from_lags(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = lags[0].nrows();
    let mut block = DMatrix::zeros(p * lags.len(), p);
    for (l, a) in lags.iter().enumerate() {
        block.rows_mut(l * p, p).copy_from(&a.transpose());
    }
    block
}

pub(crate) fn edge_group(block: &DMatrix<f64>, p: usize, order: usize, i: usize, j: usize) -> DVector<f64> {
    DVector::from_iterator(order, (0..order).map(|l| block[(l * p + j, i)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_round_trip_and_filter_layout() {
        let p = 3;
        let lags: Vec<_> = (0..2)
            .map(|l| DMatrix::from_fn(p, p, |i, j| (100 * l + 10 * i + j) as f64))
            .collect();
        let block = block_from_lags(&lags);
        let stack = CoefficientStack::from_blocks(p, 2, vec![block]).unwrap();
        assert_eq!(stack.lag_matrices(0), lags);
        // a_ij = [a⁽¹⁾_ij, a⁽²⁾_ij] for i = 2, j = 0
        assert_eq!(stack.edge_filter(0, 2, 0).as_slice(), &[20.0, 120.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CoefficientStack::from_blocks(2, 2, vec![]).is_err());
        assert!(CoefficientStack::from_blocks(2, 2, vec![DMatrix::zeros(2, 2)]).is_err());
    }
}
