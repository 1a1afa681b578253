//! Contract of the synthetic TVAR generator.

use dynnet::analysis::forecast_nmse;
use dynnet::simulator::{companion_spectral_radius, generate, GeneratorConfig, RescaleScope, MIN_FILTER_FACTOR};

#[test]
fn desk_scale_configuration() {
    let cfg = GeneratorConfig::default();
    assert_eq!(
        (cfg.num_nodes, cfg.edge_prob, cfg.order, cfg.num_samples, cfg.num_breakpoints, cfg.zero_switch_prob, cfg.innovation_variance),
        (4, 0.5, 4, 1000, 100, 0.4, 0.03)
    );
    for seed in 0..5 {
        let (truth, series) = generate(&GeneratorConfig { seed, ..cfg.clone() }).unwrap();
        assert_eq!(truth.scheduled.len(), 100);
        let instants: std::collections::BTreeSet<_> = truth.scheduled.iter().map(|b| b.t).collect();
        assert_eq!(instants.len(), 100);
        for lags in truth.coeffs.segments() {
            assert!(companion_spectral_radius(lags).unwrap() <= 0.95);
        }
        assert_eq!((series.num_nodes(), series.len()), (4, 1000));
        assert!(series.values().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn bookkeeping_is_consistent() {
    for seed in 0..10 {
        let (truth, _) = generate(&GeneratorConfig { seed, ..Default::default() }).unwrap();
        assert_eq!(truth.breakpoints, truth.coeffs.local_breakpoints(0.0));
        assert_eq!(truth.edge_sets, truth.coeffs.graph(0.0));
        // every realized change is either the scheduled pair or part of a
        // whole-system rescale at that instant
        for bp in truth.breakpoints.iter() {
            let scheduled = truth.scheduled.contains(bp);
            let system = truth.rescales.iter().any(|r| r.t == bp.t && r.scope == RescaleScope::System);
            assert!(scheduled || system, "{bp:?}");
        }
        // a redrawn filter is never shrunk into invisibility
        for r in truth.rescales.iter().filter(|r| r.scope == RescaleScope::Filter) {
            assert!(r.factor >= MIN_FILTER_FACTOR, "{r:?}");
        }
        let first = truth.coeffs.edge_set_at(truth.coeffs.order() + 1, 0.0).unwrap();
        assert!(first.is_subset(&truth.support));
        assert!(truth.support.iter().all(|(i, j)| i != j));
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = GeneratorConfig { seed: 99, ..Default::default() };
    let (a, sa) = generate(&cfg).unwrap();
    let (b, sb) = generate(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(sa.values().as_slice(), sb.values().as_slice());
    let (_, other) = generate(&GeneratorConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(sa.values(), other.values());
}

#[test]
fn true_model_nmse_is_noise_to_signal_ratio() {
    let mut ratios = Vec::new();
    for seed in 0..20 {
        let cfg = GeneratorConfig { seed, num_breakpoints: 10, ..Default::default() };
        let (truth, series) = generate(&cfg).unwrap();
        let range = cfg.order + 1..=cfg.num_samples;
        let nmse = forecast_nmse(&truth.coeffs, &series, range.clone()).unwrap();
        let energy: f64 = range.clone().map(|t| series.sample(t).norm_squared()).sum::<f64>() / range.count() as f64;
        let expected = cfg.innovation_variance * cfg.num_nodes as f64 / energy;
        ratios.push(nmse / expected);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((mean - 1.0).abs() < 0.1, "mean ratio {mean}");
}
