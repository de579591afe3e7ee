use novelbench::benchmark::{extract_dataset, EvalProtocol, SetFeatures, Slice};
use novelbench::detectors::{DetectorConfig, DetectorKind};
use novelbench::features::WaveletSpec;
use novelbench::hyperopt::tuning::{tune, BestParams};
use novelbench::hyperopt::{
    expected_improvement, optimize, Domain, GpSurrogate, Param, SearchSpace,
};
use novelbench::signal::{default_specs, generate_dataset};
use novelbench::transform::TransformKind;
use proptest::collection::vec;
use proptest::prelude::*;

fn quadratic_space() -> SearchSpace {
    SearchSpace::new(vec![Param::new("x", Domain::Uniform { lo: -5.0, hi: 5.0 })]).unwrap()
}

#[test]
fn quadratic_minimum_found_within_five_percent() {
    for seed in 0..5 {
        let study = optimize(&quadratic_space(), 30, seed, |p| Ok((p[0] - 1.3).powi(2))).unwrap();
        let best = study.best().unwrap();
        assert!(
            (best.params[0] - 1.3).abs() <= 0.05 * 10.0,
            "seed {seed}: {}",
            best.params[0]
        );
        let curve = study.incumbent_curve();
        assert_eq!(curve.len(), 30);
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn optimization_is_deterministic() {
    let space = SearchSpace::new(vec![
        Param::new("a", Domain::Int { lo: 1, hi: 9 }),
        Param::new("b", Domain::LogUniform { lo: 0.01, hi: 0.1 }),
        Param::new("c", Domain::Categorical(vec![32.0, 64.0])),
    ])
    .unwrap();
    let f = |p: &[f64]| Ok((p[0] - 4.0).powi(2) + (p[1].ln() + 3.0).powi(2) + p[2] / 64.0);
    let a = optimize(&space, 15, 3, f).unwrap();
    let b = optimize(&space, 15, 3, f).unwrap();
    assert_eq!(a.trials, b.trials);
    for t in &a.trials {
        assert!((1.0..=9.0).contains(&t.params[0]) && t.params[0].fract() == 0.0);
        assert!((0.01..=0.1).contains(&t.params[1]));
        assert!(t.params[2] == 32.0 || t.params[2] == 64.0);
    }
}

#[test]
fn tuning_a_real_combination_records_history() {
    let specs: Vec<_> = default_specs()
        .into_iter()
        .take(1)
        .map(|s| s.with_duration(100.0).with_noise(0.01))
        .collect();
    let sets: Vec<SetFeatures> = extract_dataset(
        &generate_dataset(&specs, 0).unwrap(),
        &WaveletSpec::default(),
    )
    .unwrap();
    let protocol = EvalProtocol {
        train: Slice::new("set1", 0, Some(70)),
        nominal: Slice::new("set1", 70, None),
        novelty: None,
        trace: Vec::new(),
    };
    let cfg = DetectorConfig::default();
    let study = tune(
        &sets,
        &protocol,
        DetectorKind::Gmm,
        TransformKind::Pca,
        &cfg,
        6,
        0,
        None,
    )
    .unwrap();
    assert_eq!(study.trials.len(), 6);
    let more = tune(
        &sets,
        &protocol,
        DetectorKind::Gmm,
        TransformKind::Pca,
        &cfg,
        2,
        0,
        Some(study.clone()),
    )
    .unwrap();
    assert_eq!(&more.trials[..6], &study.trials[..]);
    let best = BestParams::from_study(DetectorKind::Gmm, TransformKind::Pca, &more).unwrap();
    assert_eq!(BestParams::parse(&best.to_text()).unwrap(), best);
    assert!(tune(
        &sets,
        &protocol,
        DetectorKind::Gmm,
        TransformKind::Of,
        &cfg,
        2,
        0,
        None
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn surrogate_interpolates_observations(
        xs in vec(vec(0.0f64..1.0, 2), 2..12),
        ys in vec(-10.0f64..10.0, 12),
    ) {
        // drop near-duplicate inputs, which the interpolation claim excludes
        let mut x: Vec<Vec<f64>> = Vec::new();
        for p in xs {
            if x.iter().all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) > 0.05) {
                x.push(p);
            }
        }
        let y = &ys[..x.len()];
        let gp = GpSurrogate::fit(&x, y).unwrap();
        let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (p, t) in x.iter().zip(y) {
            let (m, _) = gp.predict(p);
            prop_assert!((m - t).abs() <= 1e-6 * scale, "{} vs {}", m, t);
        }
    }

    #[test]
    fn expected_improvement_is_nonnegative(mean in -100.0f64..100.0, sd in 0.0f64..50.0, best in -100.0f64..100.0) {
        prop_assert!(expected_improvement(mean, sd, best) >= 0.0);
    }

    #[test]
    fn expected_improvement_vanishes_without_uncertainty(gap in 0.0f64..10.0, best in -10.0f64..10.0) {
        let ei = expected_improvement(best + gap, 1e-12, best);
        prop_assert!(ei <= 1e-12);
    }
}
