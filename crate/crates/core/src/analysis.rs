//! Breakpoint detection on estimates, recovery metrics against a ground
//! truth, forecast error, and the global-fusion baseline.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{Breakpoint, BreakpointSet, MultivariateSeries, TvarCoefficients, DEFAULT_ZERO_TOL};
use crate::optimizer::{AdmmConfig, DesignMatrices, Penalty, SolveReport};
use crate::windowing::{solve_windowed, WindowPartition};

/// Edges whose filter jumps by more than `tol` (ℓ₂) between consecutive
/// segments. On windowed estimates these are window boundaries, so at most
/// one breakpoint per edge per window is ever reported.
pub fn detect_local_breakpoints(coeffs: &TvarCoefficients, tol: f64) -> Result<BreakpointSet> {
    if tol.is_nan() || tol < 0.0 {
        return invalid(format!("detection tolerance must be nonnegative, got {tol}"));
    }
    Ok(coeffs.local_breakpoints(tol))
}

/// `10⁻³ ×` the median nonzero filter norm of the estimate (falls back to
/// the edge zero tolerance for an all-zero estimate).
pub fn default_detection_tol(coeffs: &TvarCoefficients) -> f64 {
    let p = coeffs.num_nodes();
    let mut norms: Vec<f64> = (0..coeffs.num_segments())
        .flat_map(|s| (1..=p).flat_map(move |i| (1..=p).map(move |j| (s, i, j))))
        .map(|(s, i, j)| coeffs.filter_in_segment(s, i, j).norm())
        .filter(|&n| n > DEFAULT_ZERO_TOL)
        .collect();
    if norms.is_empty() {
        return DEFAULT_ZERO_TOL;
    }
    norms.sort_by(f64::total_cmp);
    let mid = norms.len() / 2;
    let median = if norms.len() % 2 == 1 { norms[mid] } else { 0.5 * (norms[mid - 1] + norms[mid]) };
    1e-3 * median
}

/// Precision, recall and F1 from match counts. Empty claims give
/// precision 1 and an empty reference gives recall 1.
fn prf(true_pos: usize, claimed: usize, actual: usize) -> (f64, f64, f64) {
    let precision = if claimed == 0 { 1.0 } else { true_pos as f64 / claimed as f64 };
    let recall = if actual == 0 { 1.0 } else { true_pos as f64 / actual as f64 };
    (precision, recall, f1(precision, recall))
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointMetrics {
    pub detected: usize,
    pub truth: usize,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub time_tol: usize,
}

/// One-to-one matching of triplets on the same edge with
/// `|t_det − t_true| ≤ time_tol`.
///
/// Per edge, both time lists are swept in order and the earliest compatible
/// pair is matched greedily, which is a maximum matching for interval
/// constraints on a line. The match count is symmetric in its arguments.
pub fn match_breakpoints(detected: &BreakpointSet, truth: &BreakpointSet, time_tol: usize) -> BreakpointMetrics {
    let mut matched = 0;
    fn by_edge(set: &BreakpointSet) -> Vec<&Breakpoint> {
        let mut v: Vec<&Breakpoint> = set.iter().collect();
        v.sort_by_key(|b| (b.i, b.j, b.t));
        v
    }
    let (det, tru) = (by_edge(detected), by_edge(truth));
    let (mut a, mut b) = (0, 0);
    while a < det.len() && b < tru.len() {
        let (d, t) = (det[a], tru[b]);
        if (d.i, d.j) != (t.i, t.j) {
            if (d.i, d.j) < (t.i, t.j) {
                a += 1;
            } else {
                b += 1;
            }
            continue;
        }
        if d.t.abs_diff(t.t) <= time_tol {
            matched += 1;
            a += 1;
            b += 1;
        } else if d.t < t.t {
            a += 1;
        } else {
            b += 1;
        }
    }
    let (precision, recall, f1) = prf(matched, detected.len(), truth.len());
    BreakpointMetrics {
        detected: detected.len(),
        truth: truth.len(),
        true_positives: matched,
        false_positives: detected.len() - matched,
        false_negatives: truth.len() - matched,
        precision,
        recall,
        f1,
        time_tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMetrics {
    /// Per-instant precision averaged over `[L+1, T]`.
    pub precision: f64,
    /// Per-instant recall averaged over `[L+1, T]`.
    pub recall: f64,
    /// Harmonic mean of the averaged precision and recall.
    pub f1: f64,
    /// Edge-instant counts pooled over time.
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Compares `E_t` of estimate and truth at every instant.
pub fn edge_recovery(est: &TvarCoefficients, truth: &TvarCoefficients, zero_tol: f64) -> Result<EdgeMetrics> {
    check_compatible(est, truth)?;
    let (ge, gt) = (est.graph(zero_tol), truth.graph(zero_tol));
    let (mut psum, mut rsum) = (0.0, 0.0);
    let (mut tp, mut fp, mut fnn) = (0, 0, 0);
    let mut count = 0;
    for ((_, e), (_, t)) in ge.iter().zip(gt.iter()) {
        let hit = e.intersection(t).count();
        let (p, r, _) = prf(hit, e.len(), t.len());
        psum += p;
        rsum += r;
        tp += hit;
        fp += e.len() - hit;
        fnn += t.len() - hit;
        count += 1;
    }
    let (precision, recall) = (psum / count as f64, rsum / count as f64);
    Ok(EdgeMetrics {
        precision,
        recall,
        f1: f1(precision, recall),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fnn,
    })
}

fn check_compatible(a: &TvarCoefficients, b: &TvarCoefficients) -> Result<()> {
    for (name, x, y) in [
        ("P", a.num_nodes(), b.num_nodes()),
        ("L", a.order(), b.order()),
        ("T", a.num_samples(), b.num_samples()),
    ] {
        if x != y {
            return invalid(format!("{name} differs: estimate has {x}, truth has {y}"));
        }
    }
    Ok(())
}

/// `Σ ‖y_t − ŷ_t‖² / Σ ‖y_t‖²` over `holdout`.
pub fn forecast_nmse(coeffs: &TvarCoefficients, series: &MultivariateSeries, holdout: RangeInclusive<usize>) -> Result<f64> {
    if holdout.is_empty() {
        return invalid("empty holdout range");
    }
    if *holdout.start() < coeffs.order() + 1 || *holdout.end() > series.len().min(coeffs.num_samples()) {
        return invalid(format!(
            "holdout [{}, {}] outside [{}, {}]",
            holdout.start(),
            holdout.end(),
            coeffs.order() + 1,
            series.len().min(coeffs.num_samples())
        ));
    }
    let (mut err, mut energy) = (0.0, 0.0);
    for t in holdout {
        let y = series.sample(t);
        err += (&y - coeffs.forecast_one_step(series, t)?).norm_squared();
        energy += y.norm_squared();
    }
    if energy == 0.0 {
        return invalid("holdout has zero energy");
    }
    Ok(err / energy)
}

/// Fits `½‖Y − ZB‖²_F + λ Σ_n ‖B̃_n − B̃_{n−1}‖_F`: one fusion group per
/// window boundary spanning all edges, no sparsity term.
pub fn baseline_global_solve(
    design: &DesignMatrices,
    partition: &WindowPartition,
    lambda: f64,
    cfg: &AdmmConfig,
) -> Result<(TvarCoefficients, SolveReport)> {
    let cfg = cfg.with_penalty(Penalty::global_fused(lambda));
    let (coeffs, out) = solve_windowed(design, partition, &cfg, None)?;
    Ok((coeffs, out.report))
}

/// Every segment boundary changes either all `P²` filters or none.
pub fn is_globally_aligned(coeffs: &TvarCoefficients, tol: f64) -> bool {
    let p2 = coeffs.num_nodes() * coeffs.num_nodes();
    let bps = coeffs.local_breakpoints(tol);
    bps.instants()
        .iter()
        .all(|&t| bps.iter().filter(|b| b.t == t).count() == p2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOptions {
    pub zero_tol: f64,
    /// Detection tolerance; `None` uses [`default_detection_tol`].
    pub detection_tol: Option<f64>,
    /// Matching tolerance; `None` uses the length of the estimate's first
    /// segment (one window).
    pub time_tol: Option<usize>,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self { zero_tol: DEFAULT_ZERO_TOL, detection_tol: None, time_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub edges: EdgeMetrics,
    pub breakpoints: BreakpointMetrics,
    /// In-sample one-step NMSE over `[L+1, T]`, when a series is supplied.
    pub nmse: Option<f64>,
    pub detection_tol: f64,
    pub zero_tol: f64,
}

/// Full comparison of an estimate against the ground-truth coefficients.
pub fn evaluate(
    est: &TvarCoefficients,
    truth: &TvarCoefficients,
    series: Option<&MultivariateSeries>,
    opts: &EvaluationOptions,
) -> Result<RecoveryMetrics> {
    check_compatible(est, truth)?;
    let detection_tol = opts.detection_tol.unwrap_or_else(|| default_detection_tol(est));
    let time_tol = opts.time_tol.unwrap_or_else(|| {
        let (a, b) = est.segment_range(0);
        b - a + 1
    });
    let detected = detect_local_breakpoints(est, detection_tol)?;
    let actual = truth.local_breakpoints(0.0);
    let nmse = series
        .map(|s| forecast_nmse(est, s, est.order() + 1..=est.num_samples()))
        .transpose()?;
    Ok(RecoveryMetrics {
        edges: edge_recovery(est, truth, opts.zero_tol)?,
        breakpoints: match_breakpoints(&detected, &actual, time_tol),
        nmse,
        detection_tol,
        zero_tol: opts.zero_tol,
    })
}

/// One row per edge and segment: the numeric content behind a
/// filter-norm heat map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub i: usize,
    pub j: usize,
    pub start: usize,
    pub end: usize,
    pub norm: f64,
    pub taps: Vec<f64>,
}

pub fn norm_trajectories(coeffs: &TvarCoefficients) -> Vec<NormRow> {
    let p = coeffs.num_nodes();
    let mut rows = Vec::with_capacity(p * p * coeffs.num_segments());
    for i in 1..=p {
        for j in 1..=p {
            for s in 0..coeffs.num_segments() {
                let f = coeffs.filter_in_segment(s, i, j);
                let (start, end) = coeffs.segment_range(s);
                rows.push(NormRow { i, j, start, end, norm: f.norm(), taps: f.taps().to_vec() });
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn bp(t: usize, i: usize, j: usize) -> Breakpoint {
        Breakpoint { t, i, j }
    }

    #[test]
    fn detection_examples() {
        let base = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.2, 0.1]);
        let inv = TvarCoefficients::new(1, 60, vec![2, 22, 42], vec![vec![base.clone()]; 3]).unwrap();
        assert!(detect_local_breakpoints(&inv, 0.0).unwrap().is_empty());

        let mut jump = base.clone();
        jump[(0, 1)] = 0.5;
        let one = TvarCoefficients::new(1, 60, vec![2, 22, 42], vec![vec![base.clone()], vec![jump.clone()], vec![jump]]).unwrap();
        assert_eq!(detect_local_breakpoints(&one, 1e-6).unwrap().as_slice(), &[bp(22, 1, 2)]);
        assert!(detect_local_breakpoints(&one, f64::INFINITY).unwrap().is_empty());
        assert!(detect_local_breakpoints(&one, -1.0).is_err());
    }

    #[test]
    fn matching_examples() {
        let truth = BreakpointSet::new(vec![bp(50, 1, 2), bp(80, 2, 1)]);
        let m = match_breakpoints(&truth, &truth, 0);
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let m = match_breakpoints(&BreakpointSet::default(), &truth, 5);
        assert_eq!((m.precision, m.recall), (1.0, 0.0));

        let one = BreakpointSet::new(vec![bp(50, 1, 2)]);
        let near = BreakpointSet::new(vec![bp(51, 1, 2)]);
        assert_eq!(match_breakpoints(&near, &one, 1).true_positives, 1);
        assert_eq!(match_breakpoints(&near, &one, 0).true_positives, 0);
        // same time, different edge never matches
        let other = BreakpointSet::new(vec![bp(50, 2, 1)]);
        assert_eq!(match_breakpoints(&other, &one, 10).true_positives, 0);
    }

    #[test]
    fn matching_is_one_to_one() {
        let truth = BreakpointSet::new(vec![bp(10, 1, 2), bp(14, 1, 2)]);
        let det = BreakpointSet::new(vec![bp(12, 1, 2)]);
        let m = match_breakpoints(&det, &truth, 5);
        assert_eq!((m.true_positives, m.false_negatives, m.false_positives), (1, 1, 0));
        // sweep picks the pairing that matches both
        let det = BreakpointSet::new(vec![bp(9, 1, 2), bp(13, 1, 2)]);
        let truth = BreakpointSet::new(vec![bp(12, 1, 2), bp(8, 1, 2)]);
        assert_eq!(match_breakpoints(&det, &truth, 1).true_positives, 2);
    }

    #[test]
    fn edge_recovery_examples() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.4;
        let truth = TvarCoefficients::time_invariant(20, vec![a]).unwrap();
        let m = edge_recovery(&truth, &truth, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));

        let empty = TvarCoefficients::zeros(2, 1, 20).unwrap();
        let m = edge_recovery(&empty, &truth, DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.false_negatives, 19);

        let wrong_t = TvarCoefficients::zeros(2, 1, 21).unwrap();
        assert!(edge_recovery(&wrong_t, &truth, DEFAULT_ZERO_TOL).is_err());
    }

    #[test]
    fn nmse_limits() {
        let series = MultivariateSeries::from_values(DMatrix::from_row_slice(1, 4, &[1.0, 0.5, 0.25, 0.125])).unwrap();
        let perfect = TvarCoefficients::time_invariant(4, vec![DMatrix::from_element(1, 1, 0.5)]).unwrap();
        assert_eq!(forecast_nmse(&perfect, &series, 2..=4).unwrap(), 0.0);
        let zero = TvarCoefficients::zeros(1, 1, 4).unwrap();
        assert_eq!(forecast_nmse(&zero, &series, 2..=4).unwrap(), 1.0);
        assert!(forecast_nmse(&zero, &series, 3..=2).is_err());
        assert!(forecast_nmse(&zero, &series, 1..=2).is_err());
    }

    #[test]
    fn default_tol_uses_median() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 1.0, 2.0]);
        let c = TvarCoefficients::time_invariant(10, vec![a]).unwrap();
        assert!((default_detection_tol(&c) - 2e-3).abs() < 1e-15);
        let z = TvarCoefficients::zeros(2, 1, 10).unwrap();
        assert_eq!(default_detection_tol(&z), DEFAULT_ZERO_TOL);
    }

    #[test]
    fn norm_rows_for_time_invariant_model() {
        let c = TvarCoefficients::time_invariant(10, vec![DMatrix::zeros(3, 3), DMatrix::identity(3, 3)]).unwrap();
        let rows = norm_trajectories(&c);
        assert_eq!(rows.len(), 9);
        assert!(rows.iter().filter(|r| r.i != r.j).all(|r| r.norm == 0.0));
        assert!(rows.iter().filter(|r| r.i == r.j).all(|r| r.norm == 1.0 && r.taps == vec![0.0, 1.0]));
    }
}
