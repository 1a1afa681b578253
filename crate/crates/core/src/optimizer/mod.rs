//! Matrix-form criterion and its ADMM solver.
//!
//! The criterion over coefficient blocks `B_n` (`PL × P`, one per window) is
//!
//! ```text
//! ½‖Y − ZB‖²_F + λ Σ_ij Σ_n ‖b_ij,n‖₂ + γ Σ_ij Σ_n ‖b_ij,n+1 − b_ij,n‖₂
//! ```
//!
//! where `b_ij,n` is the length-`L` filter of edge `(i, j)` inside `B_n`.
//! The fused term equals the group lasso of `DB`, with `D` the first
//! difference across blocks, which is what makes the ADMM splitting
//! `DB = Θ`, `B = C` possible.

mod admm;
mod block_solve;
mod design;
mod penalty;
mod problem;
mod stack;

pub use admm::{admm_solve, admm_solve_design, b_update, compute_residuals, AdmmConfig, AdmmOutcome, AdmmState, Residuals, SolveReport};
pub use block_solve::BlockTridiagonalFactor;
pub use design::DesignMatrices;
pub use penalty::{difference, group_lasso, group_total_variation, objective_value, prox_group_l2, whole_block_fusion, FusionGroups, Penalty};
pub use problem::BlockProblem;
pub use stack::CoefficientStack;
