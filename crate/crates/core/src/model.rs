//! Core TVAR vocabulary: observed series, piecewise-constant coefficients,
//! edge filters and the time-varying graph they induce.
//!
//! All times and node indices are 1-based. Coefficients are defined on the
//! target range `[L+1, T]` and stored segment-wise: inside a segment every
//! lag matrix is constant. A per-instant model is the degenerate case of
//! unit-length segments.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default absolute tolerance on `‖a_ij‖₂` for edge membership.
pub const DEFAULT_ZERO_TOL: f64 = 1e-10;

/// `P` scalar series observed over `T` instants.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateSeries {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl MultivariateSeries {
    /// `values` is `P × T` (one row per node).
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let (p, t) = values.shape();
        if p == 0 || t == 0 {
            return invalid("series needs at least one node and one sample");
        }
        if labels.len() != p {
            return invalid(format!("{} labels for {} nodes", labels.len(), p));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != p {
            return invalid("node labels must be distinct");
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!(
                "non-finite value at node {}, t = {}",
                k % p + 1,
                k / p + 1
            ));
        }
        Ok(Self { values, labels })
    }

    /// Labels default to `y1, …, yP`.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=values.nrows()).map(|i| format!("y{i}")).collect();
        Self::new(values, labels)
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// `y_t` for `t ∈ [1, T]`.
    pub fn sample(&self, t: usize) -> DVector<f64> {
        assert!(t >= 1 && t <= self.len(), "sample index {t} out of [1, {}]", self.len());
        self.values.column(t - 1).into_owned()
    }

    pub fn value(&self, node: usize, t: usize) -> f64 {
        self.values[(node - 1, t - 1)]
    }

    /// Scales every sample by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(&self.values * alpha, self.labels.clone())
    }
}

/// Innovation process parameters: `ε_t ~ N(0, σ² I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    pub variance: f64,
}

impl InnovationSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "innovation variance must be positive, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Impulse response `a_ij,t = [a⁽¹⁾, …, a⁽ᴸ⁾]` of the LTV filter from node
/// `j` to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFilter {
    taps: Vec<f64>,
}

impl EdgeFilter {
    pub fn new(taps: Vec<f64>) -> Self {
        Self { taps }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn order(&self) -> usize {
        self.taps.len()
    }

    pub fn norm(&self) -> f64 {
        self.taps.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &EdgeFilter) -> f64 {
        self.taps
            .iter()
            .zip(&other.taps)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A local breakpoint: the filter of edge `(i, j)` changes at instant `t`,
/// i.e. `a_ij,t ≠ a_ij,t−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Breakpoint {
    pub t: usize,
    pub i: usize,
    pub j: usize,
}

/// Sorted, deduplicated breakpoint triplets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BreakpointSet {
    items: Vec<Breakpoint>,
}

impl BreakpointSet {
    pub fn new(mut items: Vec<Breakpoint>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Breakpoint> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Breakpoint] {
        &self.items
    }

    pub fn contains(&self, bp: &Breakpoint) -> bool {
        self.items.binary_search(bp).is_ok()
    }

    /// Projection onto time: the global breakpoint instants.
    pub fn instants(&self) -> BTreeSet<usize> {
        self.items.iter().map(|b| b.t).collect()
    }

    /// Checks `t ∈ [L+2, T]` and `i, j ∈ [1, P]`.
    pub fn validate(&self, order: usize, num_samples: usize, num_nodes: usize) -> Result<()> {
        for b in &self.items {
            if b.t < order + 2 || b.t > num_samples {
                return invalid(format!("breakpoint time {} outside [{}, {}]", b.t, order + 2, num_samples));
            }
            if b.i == 0 || b.i > num_nodes || b.j == 0 || b.j > num_nodes {
                return invalid(format!("breakpoint nodes ({}, {}) outside [1, {}]", b.i, b.j, num_nodes));
            }
        }
        Ok(())
    }
}

impl FromIterator<Breakpoint> for BreakpointSet {
    fn from_iter<I: IntoIterator<Item = Breakpoint>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

/// Edge sets `E_t` for every instant `t ∈ [first_time, first_time + len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeVaryingGraph {
    first_time: usize,
    edge_sets: Vec<BTreeSet<(usize, usize)>>,
}

impl TimeVaryingGraph {
    pub fn first_time(&self) -> usize {
        self.first_time
    }

    pub fn last_time(&self) -> usize {
        self.first_time + self.edge_sets.len() - 1
    }

    pub fn at(&self, t: usize) -> Option<&BTreeSet<(usize, usize)>> {
        t.checked_sub(self.first_time).and_then(|k| self.edge_sets.get(k))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BTreeSet<(usize, usize)>)> {
        self.edge_sets.iter().enumerate().map(move |(k, e)| (self.first_time + k, e))
    }
}

/// Piecewise-constant TVAR coefficients on `[L+1, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TvarCoefficients {
    order: usize,
    num_nodes: usize,
    num_samples: usize,
    segment_starts: Vec<usize>,
    segments: Vec<Vec<DMatrix<f64>>>,
}

impl TvarCoefficients {
    /// `segments[s][ℓ-1]` is the `P × P` matrix `A⁽ℓ⁾` on segment `s`, which
    /// starts at `segment_starts[s]` and runs up to the next start (or `T`).
    pub fn new(
        order: usize,
        num_samples: usize,
        segment_starts: Vec<usize>,
        segments: Vec<Vec<DMatrix<f64>>>,
    ) -> Result<Self> {
        if order == 0 {
            return invalid("model order must be positive");
        }
        if num_samples <= order {
            return invalid(format!("need T > L, got T = {num_samples}, L = {order}"));
        }
        if segment_starts.is_empty() || segment_starts.len() != segments.len() {
            return invalid("segment starts and segment blocks must be nonempty and equal in number");
        }
        if segment_starts[0] != order + 1 {
            return invalid(format!("first segment must start at L+1 = {}", order + 1));
        }
        if segment_starts.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("segment starts must be strictly increasing");
        }
        if *segment_starts.last().unwrap() > num_samples {
            return invalid("segment start beyond T");
        }
        let num_nodes = segments[0].first().map(|m| m.nrows()).unwrap_or(0);
        if num_nodes == 0 {
            return invalid("coefficient matrices must be nonempty");
        }
        for (s, lags) in segments.iter().enumerate() {
            if lags.len() != order {
                return invalid(format!("segment {} has {} lag matrices, expected {order}", s + 1, lags.len()));
            }
            for m in lags {
                if m.shape() != (num_nodes, num_nodes) {
                    return invalid(format!("segment {} has a {:?} block, expected {num_nodes}×{num_nodes}", s + 1, m.shape()));
                }
                if m.iter().any(|v| !v.is_finite()) {
                    return invalid(format!("segment {} has a non-finite coefficient", s + 1));
                }
            }
        }
        Ok(Self { order, num_nodes, num_samples, segment_starts, segments })
    }

    /// A single segment covering `[L+1, T]`.
    pub fn time_invariant(num_samples: usize, lags: Vec<DMatrix<f64>>) -> Result<Self> {
        let order = lags.len();
        Self::new(order, num_samples, vec![order + 1], vec![lags])
    }

    pub fn zeros(num_nodes: usize, order: usize, num_samples: usize) -> Result<Self> {
        Self::time_invariant(num_samples, vec![DMatrix::zeros(num_nodes, num_nodes); order])
    }

    /// One unit segment per target instant; `per_instant[k]` holds `t = L+1+k`.
    pub fn per_instant(order: usize, num_samples: usize, per_instant: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let starts = (order + 1..order + 1 + per_instant.len()).collect();
        Self::new(order, num_samples, starts, per_instant)
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

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_starts(&self) -> &[usize] {
        &self.segment_starts
    }

    pub fn segments(&self) -> &[Vec<DMatrix<f64>>] {
        &self.segments
    }

    /// Inclusive `(start, end)` of segment `s` (0-based segment index).
    pub fn segment_range(&self, s: usize) -> (usize, usize) {
        let start = self.segment_starts[s];
        let end = self
            .segment_starts
            .get(s + 1)
            .map(|next| next - 1)
            .unwrap_or(self.num_samples);
        (start, end)
    }

    fn check_time(&self, t: usize) -> Result<()> {
        if t < self.order + 1 || t > self.num_samples {
            return invalid(format!("time {t} outside [{}, {}]", self.order + 1, self.num_samples));
        }
        Ok(())
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.num_nodes {
            return invalid(format!("node {i} outside [1, {}]", self.num_nodes));
        }
        Ok(())
    }

    /// 0-based index of the segment containing `t`.
    pub fn segment_index(&self, t: usize) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.segment_starts.partition_point(|&s| s <= t) - 1)
    }

    /// `[A⁽¹⁾_t, …, A⁽ᴸ⁾_t]`.
    pub fn lags_at(&self, t: usize) -> Result<&[DMatrix<f64>]> {
        Ok(&self.segments[self.segment_index(t)?])
    }

    fn segment_filter(&self, s: usize, i: usize, j: usize) -> EdgeFilter {
        EdgeFilter::new(self.segments[s].iter().map(|a| a[(i - 1, j - 1)]).collect())
    }

    pub fn edge_filter_at(&self, i: usize, j: usize, t: usize) -> Result<EdgeFilter> {
        self.check_node(i)?;
        self.check_node(j)?;
        let s = self.segment_index(t)?;
        Ok(self.segment_filter(s, i, j))
    }

    /// Filter of edge `(i, j)` on segment `s` (0-based segment, 1-based nodes).
    pub fn filter_in_segment(&self, s: usize, i: usize, j: usize) -> EdgeFilter {
        self.segment_filter(s, i, j)
    }

    fn segment_edges(&self, s: usize, zero_tol: f64) -> BTreeSet<(usize, usize)> {
        let p = self.num_nodes;
        (1..=p)
            .flat_map(|i| (1..=p).map(move |j| (i, j)))
            .filter(|&(i, j)| self.segment_filter(s, i, j).norm() > zero_tol)
            .collect()
    }

    /// `E_t = {(i, j) : ‖a_ij,t‖₂ > zero_tol}`.
    pub fn edge_set_at(&self, t: usize, zero_tol: f64) -> Result<BTreeSet<(usize, usize)>> {
        if zero_tol < 0.0 {
            return invalid("zero tolerance must be nonnegative");
        }
        Ok(self.segment_edges(self.segment_index(t)?, zero_tol))
    }

    pub fn graph(&self, zero_tol: f64) -> TimeVaryingGraph {
        let mut edge_sets = Vec::with_capacity(self.num_samples - self.order);
        for s in 0..self.segments.len() {
            let edges = self.segment_edges(s, zero_tol);
            let (start, end) = self.segment_range(s);
            edge_sets.extend(std::iter::repeat_n(edges, end - start + 1));
        }
        TimeVaryingGraph { first_time: self.order + 1, edge_sets }
    }

    /// All `(t, i, j)` with `‖a_ij,t − a_ij,t−1‖₂ > tol`. Changes can only
    /// occur at segment starts.
    pub fn local_breakpoints(&self, tol: f64) -> BreakpointSet {
        let p = self.num_nodes;
        let mut out = Vec::new();
        for s in 1..self.segments.len() {
            let t = self.segment_starts[s];
            for i in 1..=p {
                for j in 1..=p {
                    let d = self.segment_filter(s, i, j).distance(&self.segment_filter(s - 1, i, j));
                    if d > tol {
                        out.push(Breakpoint { t, i, j });
                    }
                }
            }
        }
        BreakpointSet::new(out)
    }

    /// `ŷ_t = Σ_ℓ A⁽ℓ⁾_t y_{t−ℓ}`; `history` must hold `y_1 … y_{t−1}`.
    pub fn forecast_one_step(&self, history: &MultivariateSeries, t: usize) -> Result<DVector<f64>> {
        self.check_time(t)?;
        if history.num_nodes() != self.num_nodes {
            return invalid(format!(
                "history has {} nodes, model has {}",
                history.num_nodes(),
                self.num_nodes
            ));
        }
        if history.len() < t - 1 {
            return invalid(format!(
                "forecasting t = {t} needs {} past samples, history has {}",
                t - 1,
                history.len()
            ));
        }
        let lags = self.lags_at(t)?;
        let mut yhat = DVector::zeros(self.num_nodes);
        for (l, a) in lags.iter().enumerate() {
            let past = history.values().column(t - 2 - l);
            yhat.gemv(1.0, a, &past, 1.0);
        }
        Ok(yhat)
    }

    /// Relabels nodes: old node `k` (1-based) becomes `perm[k-1]` (1-based).
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_nodes)?;
        let p = self.num_nodes;
        let segments = self
            .segments
            .iter()
            .map(|lags| {
                lags.iter()
                    .map(|a| {
                        let mut out = DMatrix::zeros(p, p);
                        for i in 0..p {
                            for j in 0..p {
                                out[(perm[i] - 1, perm[j] - 1)] = a[(i, j)];
                            }
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Self::new(self.order, self.num_samples, self.segment_starts.clone(), segments)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.segments
            .iter()
            .flatten()
            .flat_map(|a| a.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let seen: BTreeSet<usize> = perm.iter().copied().collect();
    if perm.len() != n || seen.len() != n || seen.iter().any(|&k| k == 0 || k > n) {
        return invalid(format!("not a permutation of [1, {n}]"));
    }
    Ok(())
}
