#![allow(dead_code)]

pub mod dense;
pub mod oracle;

use dynnet::optimizer::{AdmmConfig, DesignMatrices};
use dynnet::simulator::{generate, GeneratorConfig};
use dynnet::MultivariateSeries;

/// A short realization of a random sparse TVAR with a couple of local
/// breakpoints.
pub fn small_series(p: usize, l: usize, t: usize, seed: u64) -> MultivariateSeries {
    let cfg = GeneratorConfig {
        num_nodes: p,
        edge_prob: 0.5,
        order: l,
        num_samples: t,
        num_breakpoints: 2,
        zero_switch_prob: 0.4,
        innovation_variance: 0.1,
        stability_radius: 0.9,
        seed,
    };
    generate(&cfg).expect("generator").1
}

pub fn small_design(p: usize, l: usize, t: usize, seed: u64) -> DesignMatrices {
    DesignMatrices::build(&small_series(p, l, t, seed), l).unwrap()
}

/// Solver settings tight enough for objective comparisons far below 1e−4.
pub fn tight(lambda: f64, gamma: f64) -> AdmmConfig {
    AdmmConfig { lambda, gamma, eps_abs: 1e-11, eps_rel: 1e-10, max_iters: 200_000, ..AdmmConfig::default() }
}

/// For huge fusion weights, where the objective multiplies the leftover
/// block differences of the sparse iterate by `γ`.
pub fn tightest(lambda: f64, gamma: f64) -> AdmmConfig {
    AdmmConfig { lambda, gamma, eps_abs: 1e-14, eps_rel: 1e-14, max_iters: 1_000_000, ..AdmmConfig::default() }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
