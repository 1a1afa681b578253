//! Synthetic TVAR experiments: an Erdős–Rényi support graph, a stable
//! piecewise-constant coefficient path with local breakpoints, and a
//! Gaussian realization of the process.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Breakpoint, BreakpointSet, InnovationSpec, MultivariateSeries, TimeVaryingGraph, TvarCoefficients};

/// Portable, seedable generator used by every simulation routine.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Defaults reproduce the desk-scale experiment: `P = 4`, edge probability
/// `0.5`, `L = 4`, `T = 1000`, 100 breakpoints, zero-switch probability `0.4`
/// and innovation variance `0.03`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub num_nodes: usize,
    pub edge_prob: f64,
    pub order: usize,
    pub num_samples: usize,
    pub num_breakpoints: usize,
    pub zero_switch_prob: f64,
    pub innovation_variance: f64,
    pub stability_radius: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_nodes: 4,
            edge_prob: 0.5,
            order: 4,
            num_samples: 1000,
            num_breakpoints: 100,
            zero_switch_prob: 0.4,
            innovation_variance: 0.03,
            stability_radius: 0.95,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_nodes == 0 {
            return bad("num_nodes must be at least 1".into());
        }
        if self.order == 0 {
            return bad("order must be at least 1".into());
        }
        if self.num_samples <= self.order {
            return bad(format!("num_samples ({}) must exceed order ({})", self.num_samples, self.order));
        }
        for (name, p) in [("edge_prob", self.edge_prob), ("zero_switch_prob", self.zero_switch_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.innovation_variance > 0.0 && self.innovation_variance.is_finite()) {
            return bad(format!("innovation_variance must be positive, got {}", self.innovation_variance));
        }
        if !(self.stability_radius > 0.0 && self.stability_radius < 1.0) {
            return bad(format!("stability_radius must lie in (0, 1), got {}", self.stability_radius));
        }
        if self.num_breakpoints > self.num_samples - self.order - 1 {
            return bad(format!(
                "num_breakpoints ({}) exceeds the {} available instants",
                self.num_breakpoints,
                self.num_samples - self.order - 1
            ));
        }
        if self.num_breakpoints > 0 && self.num_nodes < 2 {
            return bad("breakpoints need at least two nodes (self-loops are excluded)".into());
        }
        self.breakpoint_times().map(|_| ())
    }

    /// `t_k = L + 1 + round(k (T − L − 1) / (N_b + 1))` for `k = 1..N_b`.
    pub fn breakpoint_times(&self) -> Result<Vec<usize>> {
        let (l, t, nb) = (self.order, self.num_samples, self.num_breakpoints);
        let span = (t - l - 1) as f64;
        let times: Vec<usize> = (1..=nb)
            .map(|k| l + 1 + (k as f64 * span / (nb + 1) as f64).round() as usize)
            .collect();
        if times.windows(2).any(|w| w[0] >= w[1]) || times.iter().any(|&tb| tb < l + 2 || tb > t) {
            return Err(Error::InvalidConfig(format!(
                "{nb} uniformly spaced breakpoints collide within [{}, {t}]",
                l + 2
            )));
        }
        Ok(times)
    }

    pub fn innovation(&self) -> Result<InnovationSpec> {
        InnovationSpec::new(self.innovation_variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleScope {
    /// Only the freshly drawn filter was scaled.
    Filter,
    /// All lag matrices of the segment were scaled.
    System,
}

/// A stability rescaling applied while building the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RescaleEvent {
    /// First instant of the segment that was rescaled.
    pub t: usize,
    pub scope: RescaleScope,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub coeffs: TvarCoefficients,
    /// Realized changes, `local_breakpoints(coeffs, 0)`.
    pub breakpoints: BreakpointSet,
    pub edge_sets: TimeVaryingGraph,
    /// Erdős–Rényi support of the initial coefficients.
    pub support: BTreeSet<(usize, usize)>,
    /// Selected `(t_b, i_b, j_b)` triplets, one per scheduled breakpoint.
    pub scheduled: Vec<Breakpoint>,
    pub rescales: Vec<RescaleEvent>,
}

/// Directed Erdős–Rényi graph without self-loops; pairs are 1-based.
pub fn sample_erdos_renyi<R: Rng + ?Sized>(num_nodes: usize, edge_prob: f64, rng: &mut R) -> Result<BTreeSet<(usize, usize)>> {
    if num_nodes == 0 {
        return invalid("graph needs at least one node");
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return invalid(format!("edge probability {edge_prob} outside [0, 1]"));
    }
    let mut edges = BTreeSet::new();
    for i in 1..=num_nodes {
        for j in 1..=num_nodes {
            if i != j && rng.random::<f64>() < edge_prob {
                edges.insert((i, j));
            }
        }
    }
    Ok(edges)
}

/// Spectral radius of the `PL × PL` companion matrix
/// `[[A_1 … A_L], [I 0]]`.
pub fn companion_spectral_radius(lags: &[DMatrix<f64>]) -> Result<f64> {
    let Some(first) = lags.first() else {
        return invalid("companion matrix needs at least one lag");
    };
    let p = first.nrows();
    if lags.iter().any(|a| a.shape() != (p, p)) {
        return invalid("lag matrices must all be square and of equal size");
    }
    let l = lags.len();
    let mut comp = DMatrix::zeros(p * l, p * l);
    for (k, a) in lags.iter().enumerate() {
        comp.view_mut((0, k * p), (p, p)).copy_from(a);
    }
    for d in 0..p * (l - 1) {
        comp[(p + d, d)] = 1.0;
    }
    if comp.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    spectral_radius(&comp)
}

fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    let max_iter = 500 * n;
    let radius = |s: nalgebra::Schur<f64, nalgebra::Dyn>| {
        s.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    };
    if let Some(s) = m.clone().try_schur(f64::EPSILON, max_iter) {
        return Ok(radius(s));
    }
    // Sparse companion matrices can make the shifted QR iteration cycle.
    // A Householder similarity keeps the spectrum and breaks the pattern.
    for k in 1..=8 {
        let v = DVector::from_fn(n, |i, _| ((i + 1) as f64 * k as f64 * 0.7548).sin() + 0.1);
        let h = DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
        if let Some(s) = (&h * m * &h).try_schur(f64::EPSILON, max_iter) {
            return Ok(radius(s));
        }
    }
    Err(Error::Factorization("eigenvalue iteration did not converge".into()))
}

/// Largest feasible factor in `[0, 1]` (to bisection precision) for which
/// `radius(factor) ≤ rho_max`, assuming `radius(0) ≤ rho_max`.
fn bisect_factor(rho_max: f64, radius: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if radius(1.0)? <= rho_max {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if radius(mid)? <= rho_max {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Scales every lag matrix by a common `c ≤ 1` so that the companion
/// spectral radius is at most `rho_max`. Returns the matrices and `c`.
pub fn stabilize(lags: &[DMatrix<f64>], rho_max: f64) -> Result<(Vec<DMatrix<f64>>, f64)> {
    if !(rho_max > 0.0 && rho_max < 1.0) {
        return invalid(format!("target radius {rho_max} outside (0, 1)"));
    }
    let scaled = |c: f64| lags.iter().map(|a| a * c).collect::<Vec<_>>();
    let c = bisect_factor(rho_max, |c| companion_spectral_radius(&scaled(c)))?;
    if c == 1.0 {
        return Ok((lags.to_vec(), 1.0));
    }
    Ok((scaled(c), c))
}

fn set_filter(lags: &mut [DMatrix<f64>], i: usize, j: usize, taps: &[f64]) {
    for (a, &v) in lags.iter_mut().zip(taps) {
        a[(i - 1, j - 1)] = v;
    }
}

fn draw_taps<R: Rng + ?Sized>(order: usize, rng: &mut R) -> Vec<f64> {
    (0..order).map(|_| StandardNormal.sample(rng)).collect()
}

/// Smallest scale a redrawn filter may be shrunk by. Below it the redraw
/// would leave no visible change, so the segment is rescaled as a whole.
pub const MIN_FILTER_FACTOR: f64 = 1e-6;

/// Builds the ground-truth coefficient path.
///
/// Initial filters on the Erdős–Rényi support are standard normal and the
/// system is scaled to radius `ρ_max`. At each scheduled instant one
/// off-diagonal pair is picked uniformly; an existing edge is switched off
/// with probability `P_z`, otherwise the filter is redrawn and scaled down
/// (alone) until the system is stable again. If zeroing the edge alone
/// already breaks stability, or the segment sits so close to the radius
/// bound that the new filter would shrink below [`MIN_FILTER_FACTOR`], the
/// whole system is rescaled instead.
pub fn generate_coefficient_path<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let (p, l) = (cfg.num_nodes, cfg.order);
    let rho_max = cfg.stability_radius;
    let support = sample_erdos_renyi(p, cfg.edge_prob, rng)?;

    let mut lags = vec![DMatrix::zeros(p, p); l];
    for &(i, j) in &support {
        let taps = draw_taps(l, rng);
        set_filter(&mut lags, i, j, &taps);
    }
    let mut rescales = Vec::new();
    let (initial, factor) = stabilize(&lags, rho_max)?;
    if factor != 1.0 {
        rescales.push(RescaleEvent { t: l + 1, scope: RescaleScope::System, factor });
    }

    let times = cfg.breakpoint_times()?;
    let mut starts = vec![l + 1];
    let mut segments = vec![initial];
    let mut scheduled = Vec::with_capacity(times.len());
    let pairs: Vec<(usize, usize)> = (1..=p)
        .flat_map(|i| (1..=p).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();

    for &t in &times {
        let (i, j) = pairs[rng.random_range(0..pairs.len())];
        scheduled.push(Breakpoint { t, i, j });
        let mut next = segments.last().unwrap().clone();
        let present = next.iter().any(|a| a[(i - 1, j - 1)] != 0.0);
        let switch_off = present && rng.random::<f64>() < cfg.zero_switch_prob;

        let taps = if switch_off { vec![0.0; l] } else { draw_taps(l, rng) };
        let mut zeroed = next.clone();
        set_filter(&mut zeroed, i, j, &vec![0.0; l]);
        let stable_without = companion_spectral_radius(&zeroed)? <= rho_max;
        if stable_without && switch_off {
            next = zeroed;
        } else {
            let with = |c: f64| {
                let mut m = zeroed.clone();
                let scaled: Vec<f64> = taps.iter().map(|a| a * c).collect();
                set_filter(&mut m, i, j, &scaled);
                m
            };
            let factor = if stable_without { bisect_factor(rho_max, |c| companion_spectral_radius(&with(c)))? } else { 0.0 };
            if factor >= MIN_FILTER_FACTOR {
                if factor != 1.0 {
                    rescales.push(RescaleEvent { t, scope: RescaleScope::Filter, factor });
                }
                next = with(factor);
            } else {
                set_filter(&mut next, i, j, &taps);
                let (scaled, factor) = stabilize(&next, rho_max)?;
                rescales.push(RescaleEvent { t, scope: RescaleScope::System, factor });
                next = scaled;
            }
        }
        starts.push(t);
        segments.push(next);
    }

    let coeffs = TvarCoefficients::new(l, cfg.num_samples, starts, segments)?;
    let breakpoints = coeffs.local_breakpoints(0.0);
    let edge_sets = coeffs.graph(0.0);
    Ok(GroundTruth { coeffs, breakpoints, edge_sets, support, scheduled, rescales })
}

/// Runs the TVAR recursion from `initial` (`P × L`, columns `y_1 … y_L`)
/// with additive `innovations` (`P × (T − L)`, columns `ε_{L+1} … ε_T`).
pub fn propagate(coeffs: &TvarCoefficients, initial: &DMatrix<f64>, innovations: &DMatrix<f64>) -> Result<MultivariateSeries> {
    let (p, l, t_total) = (coeffs.num_nodes(), coeffs.order(), coeffs.num_samples());
    if initial.shape() != (p, l) {
        return invalid(format!("initial block is {:?}, expected {p}×{l}", initial.shape()));
    }
    if innovations.shape() != (p, t_total - l) {
        return invalid(format!("innovations are {:?}, expected {p}×{}", innovations.shape(), t_total - l));
    }
    let mut y = DMatrix::zeros(p, t_total);
    y.columns_mut(0, l).copy_from(initial);
    for t in l + 1..=t_total {
        let lags = coeffs.lags_at(t)?;
        let mut yt = innovations.column(t - l - 1).into_owned();
        for (k, a) in lags.iter().enumerate() {
            yt.gemv(1.0, a, &y.column(t - 2 - k), 1.0);
        }
        if yt.iter().any(|v| !v.is_finite()) {
            return Err(Error::SimulationOverflow { t });
        }
        y.set_column(t - 1, &yt);
    }
    MultivariateSeries::from_values(y)
}

/// Draws `y_1 … y_L` and `ε_{L+1} … ε_T` i.i.d. `N(0, σ² I)` and runs the
/// recursion.
pub fn simulate_series<R: Rng + ?Sized>(truth: &GroundTruth, innovation: &InnovationSpec, rng: &mut R) -> Result<MultivariateSeries> {
    let coeffs = &truth.coeffs;
    let (p, l, t_total) = (coeffs.num_nodes(), coeffs.order(), coeffs.num_samples());
    let normal = Normal::new(0.0, innovation.std_dev()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let initial = DMatrix::from_fn(p, l, |_, _| normal.sample(rng));
    let mut innovations = DMatrix::zeros(p, t_total - l);
    for col in 0..t_total - l {
        for i in 0..p {
            innovations[(i, col)] = normal.sample(rng);
        }
    }
    propagate(coeffs, &initial, &innovations)
}

/// Path and realization from one seeded stream.
pub fn generate(cfg: &GeneratorConfig) -> Result<(GroundTruth, MultivariateSeries)> {
    let mut rng = rng_from_seed(cfg.seed);
    let truth = generate_coefficient_path(cfg, &mut rng)?;
    let series = simulate_series(&truth, &cfg.innovation()?, &mut rng)?;
    Ok((truth, series))
}
