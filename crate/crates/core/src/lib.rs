//! Identification of time-varying causal graphs from non-stationary
//! multivariate time series.
//!
//! A time-varying VAR (TVAR) model is fitted under two group penalties: a
//! group lasso on every edge filter (edge sparsity) and a group total
//! variation on successive filter differences (few *local* breakpoints,
//! i.e. changes confined to individual edges). The criterion is minimized
//! with ADMM over windowed coefficient blocks.
//!
//! Module map:
//!
//! - [`model`]: series, coefficients, edge filters, graphs, forecasting.
//! - [`simulator`]: Erdős–Rényi support, stable coefficient paths with local
//!   breakpoints, process realizations.
//! - [`optimizer`]: design matrices, regularizers, group soft-thresholding,
//!   the block-tridiagonal solve and the ADMM loop.
//! - [`windowing`]: window partitions and the collapsed (windowed) problem.
//! - [`selection`]: interleaved cross-validation and grid search.
//! - [`analysis`]: breakpoint detection, recovery metrics, the global-fusion
//!   baseline.
//!
//! Time indices and node indices are 1-based throughout the public API.

pub mod analysis;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod selection;
pub mod simulator;
pub mod windowing;

pub use error::{Error, Result};
pub use model::{
    Breakpoint, BreakpointSet, EdgeFilter, InnovationSpec, MultivariateSeries, TimeVaryingGraph,
    TvarCoefficients, DEFAULT_ZERO_TOL,
};
