//! Solver for the B-update system
//!
//! ```text
//! (ZᵀZ/ρ + I + DᵀD) B = rhs
//! ```
//!
//! `ZᵀZ` is block diagonal with the per-block Grams and `DᵀD` is block
//! tridiagonal with `−I` off the diagonal, so the whole system is block
//! tridiagonal with diagonal blocks `M_n = G_n/ρ + (1 + deg_n) I`, where
//! `deg_n ∈ {0, 1, 2}` counts the neighbours of block `n`. Block elimination
//! gives Schur complements `S_1 = M_1`, `S_n = M_n − S_{n−1}⁻¹`; their
//! inverses are computed once per `(problem, ρ)` and reused.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockTridiagonalFactor {
    schur_inv: Vec<DMatrix<f64>>,
}

impl BlockTridiagonalFactor {
    pub fn new(grams: &[DMatrix<f64>], rho: f64) -> Result<Self> {
        let n = grams.len();
        let mut schur_inv: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for (k, g) in grams.iter().enumerate() {
            let dim = g.nrows();
            let degree = usize::from(k > 0) + usize::from(k + 1 < n);
            let mut s = g / rho;
            for d in 0..dim {
                s[(d, d)] += 1.0 + degree as f64;
            }
            if let Some(prev) = schur_inv.last() {
                s -= prev;
            }
            // symmetrize against round-off before factoring
            let s = (&s + s.transpose()) * 0.5;
            let chol = s
                .cholesky()
                .ok_or_else(|| Error::Factorization(format!("Schur complement {} is not positive definite", k + 1)))?;
            schur_inv.push(chol.inverse());
        }
        Ok(Self { schur_inv })
    }

    pub fn num_blocks(&self) -> usize {
        self.schur_inv.len()
    }

    /// Solves for all right-hand-side columns at once.
    pub fn solve(&self, rhs: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let n = self.schur_inv.len();
        assert_eq!(rhs.len(), n, "right-hand side has the wrong number of blocks");
        // forward: z_n = r_n + S_{n−1}⁻¹ z_{n−1}
        let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(n);
        for (k, r) in rhs.iter().enumerate() {
            let mut zk = r.clone();
            if k > 0 {
                zk.gemm(1.0, &self.schur_inv[k - 1], &z[k - 1], 1.0);
            }
            z.push(zk);
        }
        // backward: x_N = S_N⁻¹ z_N, x_n = S_n⁻¹ (z_n + x_{n+1})
        let mut x: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); n];
        for k in (0..n).rev() {
            if k + 1 < n {
                z[k] += &x[k + 1];
            }
            x[k] = &self.schur_inv[k] * &z[k];
        }
        x
    }
}
