//! Recovery metrics against hand-counted and relabeled references.

mod common;

use dynnet::analysis::{detect_local_breakpoints, edge_recovery, evaluate, match_breakpoints, EvaluationOptions};
use dynnet::optimizer::DesignMatrices;
use dynnet::simulator::{generate, GeneratorConfig};
use dynnet::windowing::{solve_windowed, WindowPartition};
use dynnet::{Breakpoint, BreakpointSet, TvarCoefficients, DEFAULT_ZERO_TOL};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn with_edges(p: usize, edges: &[(usize, usize)]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, p);
    for &(i, j) in edges {
        a[(i - 1, j - 1)] = 0.3;
    }
    a
}

#[test]
fn edge_metrics_by_counting() {
    let truth = TvarCoefficients::time_invariant(30, vec![with_edges(3, &[(1, 2), (2, 3), (3, 1)])]).unwrap();
    let est = TvarCoefficients::time_invariant(30, vec![with_edges(3, &[(1, 2), (1, 3), (2, 1), (2, 3)])]).unwrap();
    // 2 shared, 2 spurious, 1 missed at every instant
    let m = edge_recovery(&est, &truth, DEFAULT_ZERO_TOL).unwrap();
    assert!((m.precision - 0.5).abs() < 1e-15);
    assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
    assert!((m.f1 - 4.0 / 7.0).abs() < 1e-15);
    assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (58, 58, 29));

    // complement of the truth among off-diagonal pairs
    let comp = TvarCoefficients::time_invariant(30, vec![with_edges(3, &[(1, 3), (2, 1), (3, 2)])]).unwrap();
    let m = edge_recovery(&comp, &truth, DEFAULT_ZERO_TOL).unwrap();
    assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
}

#[test]
fn metrics_survive_relabeling() {
    let (truth, series) = generate(&GeneratorConfig { num_samples: 300, num_breakpoints: 20, seed: 5, ..Default::default() }).unwrap();
    let design = DesignMatrices::build(&series, 4).unwrap();
    let part = WindowPartition::uniform(4, 300, 20).unwrap();
    let (est, _) = solve_windowed(&design, &part, &common::tight(0.05, 0.05), None).unwrap();
    let opts = EvaluationOptions { detection_tol: Some(1e-4), ..Default::default() };
    let base = evaluate(&est, &truth.coeffs, None, &opts).unwrap();
    let perm = [2, 4, 1, 3];
    let moved = evaluate(&est.permute_nodes(&perm).unwrap(), &truth.coeffs.permute_nodes(&perm).unwrap(), None, &opts).unwrap();
    assert_eq!(base.edges, moved.edges);
    assert_eq!(base.breakpoints, moved.breakpoints);
}

#[test]
fn windowed_detections_sit_on_window_boundaries() {
    let (_, series) = generate(&GeneratorConfig { num_samples: 300, num_breakpoints: 30, seed: 8, ..Default::default() }).unwrap();
    let design = DesignMatrices::build(&series, 4).unwrap();
    let part = WindowPartition::uniform(4, 300, 15).unwrap();
    let (est, _) = solve_windowed(&design, &part, &common::tight(0.01, 0.01), None).unwrap();
    let found = detect_local_breakpoints(&est, 0.0).unwrap();
    assert!(!found.is_empty());
    for bp in found.iter() {
        assert!(part.starts()[1..].contains(&bp.t));
    }
}

fn triplets() -> impl Strategy<Value = BreakpointSet> {
    prop::collection::vec((2usize..60, 1usize..4, 1usize..4), 0..12)
        .prop_map(|v| BreakpointSet::new(v.into_iter().map(|(t, i, j)| Breakpoint { t, i, j }).collect()))
}

proptest! {
    #[test]
    fn matching_is_symmetric(a in triplets(), b in triplets(), tol in 0usize..6) {
        let ab = match_breakpoints(&a, &b, tol);
        let ba = match_breakpoints(&b, &a, tol);
        prop_assert_eq!(ab.true_positives, ba.true_positives);
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-15);
        prop_assert!(ab.true_positives <= a.len().min(b.len()));
    }
}
