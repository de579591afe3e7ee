use novelbench::features::{
    extract, feature_count, stat_features, wpd_leaves, wpd_norms, Normalizer, WaveletSpec,
};
use novelbench::signal::{synth_signal, HarmonicSpec, TimeSeries};
use proptest::collection::vec;
use proptest::prelude::*;

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

#[test]
fn default_extraction_yields_seventy_features() {
    let ts = synth_signal(&HarmonicSpec::v1(), 1.0, 1666.0).unwrap();
    let spec = WaveletSpec::default();
    assert_eq!(extract(&ts, &spec).unwrap().len(), 70);
    assert_eq!(feature_count(&spec), 70);
}

#[test]
fn constant_signal_has_zero_higher_moments() {
    let s = stat_features(&[2.0; 16]).unwrap();
    assert_eq!(s, [2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
}

proptest! {
    #[test]
    fn packet_energy_equals_signal_energy(
        x in vec(-10.0f64..10.0, 64..1700),
        order in 1usize..=10,
        levels in 0usize..=6,
    ) {
        let spec = WaveletSpec::new(order, levels).unwrap();
        let leaves = wpd_leaves(&x, &spec).unwrap();
        prop_assert_eq!(leaves.len(), 1 << levels);
        let total: f64 = leaves.iter().map(|l| energy(l)).sum();
        prop_assert!((total - energy(&x)).abs() <= 1e-9 * energy(&x).max(1e-300));
    }

    #[test]
    fn packet_norms_are_scale_equivariant(x in vec(-1.0f64..1.0, 64..600), c in -50.0f64..50.0) {
        let spec = WaveletSpec::new(4, 3).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let a = wpd_norms(&x, &spec).unwrap();
        let b = wpd_norms(&scaled, &spec).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((v - c.abs() * u).abs() <= 1e-9 * (c.abs() * u).max(1e-12));
        }
    }

    #[test]
    fn feature_length_is_leaves_plus_six(levels in 0usize..=8, extra in 0usize..300) {
        let spec = WaveletSpec::new(2, levels).unwrap();
        let n = (1 << levels) + extra;
        let ts = TimeSeries::new((0..n).map(|i| (i as f64 * 0.37).sin()).collect(), 100.0).unwrap();
        prop_assert_eq!(extract(&ts, &spec).unwrap().len(), (1 << levels) + 6);
    }

    #[test]
    fn normalizing_twice_changes_nothing(rows in vec(vec(-100.0f64..100.0, 5), 3..40)) {
        let n = Normalizer::fit(&rows).unwrap();
        let z = n.normalize_all(&rows).unwrap();
        let again = Normalizer::fit(&z).unwrap();
        let z2 = again.normalize_all(&z).unwrap();
        for (a, b) in z.iter().flatten().zip(z2.iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let cols = rows[0].len();
        for c in 0..cols {
            let col: Vec<f64> = z.iter().map(|r| r[c]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            prop_assert!(m.abs() < 1e-9);
        }
    }
}
