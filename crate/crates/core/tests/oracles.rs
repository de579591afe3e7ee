mod common;

use common::*;
use novelbench::detectors::dbscan::dbscan_labels;
use novelbench::detectors::gmm::fit_em;
use novelbench::detectors::ocsvm::rbf;
use novelbench::detectors::ocsvm::solve_dual;
use novelbench::detectors::{silhouette, GmmModel, LofModel, OcsvmModel};
use novelbench::features::stat_features;
use novelbench::transform::{AeArch, AeModel, AeVariant, PcaModel, PcaTarget};
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, Normal};

#[test]
fn stat_features_match_two_pass_oracle() {
    for seed in 0..20 {
        let x: Vec<f64> = random_rows(257, 1, seed)
            .into_iter()
            .map(|r| r[0] * 3.0 + 0.5)
            .collect();
        let got = stat_features(&x).unwrap();
        let want = stat_oracle(&x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0), "{g} vs {w}");
        }
    }
}

#[test]
fn silhouette_matches_brute_force() {
    for seed in 0..5 {
        let rows = random_rows(100, 3, seed);
        let labels: Vec<usize> = (0..100).map(|i| (i * 7 + seed as usize) % 4).collect();
        let got = silhouette(&rows, &labels).unwrap();
        let want = silhouette_oracle(&rows, &labels);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn silhouette_with_singleton_cluster() {
    let rows = random_rows(30, 2, 9);
    let mut labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
    labels[0] = 2;
    let got = silhouette(&rows, &labels).unwrap();
    assert!((got - silhouette_oracle(&rows, &labels)).abs() < 1e-12);
}

#[test]
fn lof_matches_brute_force() {
    let train = random_rows(100, 2, 1);
    let queries = random_rows(25, 2, 2);
    for k in [5, 20] {
        let m = LofModel::fit(&train, k).unwrap();
        for q in queries.iter().chain([vec![3.0, -4.0]].iter()) {
            let got = m.score(q);
            let want = lof_oracle(&train, k, q);
            assert!(
                (got - want).abs() < 1e-9 * want.max(1.0),
                "k={k}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn dbscan_matches_closed_ball_definition() {
    for seed in 0..10 {
        let rows = random_rows(50, 2, seed);
        for (eps, min_pts) in [(0.2, 3), (0.3, 5), (0.15, 2)] {
            let labels = dbscan_labels(&rows, eps, min_pts);
            let (core, noise) = dbscan_oracle(&rows, eps, min_pts);
            for i in 0..50 {
                assert_eq!(labels[i].is_none(), noise[i], "noise mismatch at {i}");
            }
            // core points share a label exactly when they share a component
            let comp = core_components(&rows, &core, eps);
            for i in (0..50).filter(|&i| core[i]) {
                for j in (0..50).filter(|&j| core[j]) {
                    assert_eq!(labels[i] == labels[j], comp[i] == comp[j]);
                }
            }
        }
    }
}

#[test]
fn ocsvm_dual_matches_grid_search() {
    let points = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.2],
        vec![0.3, 1.4],
        vec![2.5, 2.0],
    ];
    let (gamma, nu) = (0.5, 0.5);
    let kernel: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| rbf(gamma, a, b)).collect())
        .collect();
    let sol = solve_dual(&kernel, nu).unwrap();
    let (alpha, obj) = ocsvm_grid_oracle(&points, gamma, nu);
    for (a, b) in sol.alpha.iter().zip(&alpha) {
        assert!((a - b).abs() < 1e-3, "{:?} vs {:?}", sol.alpha, alpha);
    }
    assert!((sol.objective - obj).abs() < 1e-3);
    let m = OcsvmModel::fit(&points, nu, Some(gamma)).unwrap();
    assert!((m.w_norm - (2.0 * obj).sqrt()).abs() < 1e-3);
}

#[test]
fn autoencoder_gradient_matches_finite_differences() {
    let rows = random_rows(5, 6, 3);
    for (variant, arch) in [
        (AeVariant::Undercomplete, AeArch::symmetric(4, 2)),
        (AeVariant::Overcomplete, AeArch::symmetric(8, 10)),
    ] {
        let mut m = AeModel::init(6, variant, arch, 11).unwrap();
        // nonzero biases so every branch of both activations is exercised
        for i in 0..m.n_params() {
            let p = m.param(i);
            m.set_param(i, p + 0.05 * ((i % 7) as f64 - 3.0));
        }
        let (loss, analytic) = m.gradient(&rows);
        assert!((loss - m.loss(&rows)).abs() < 1e-12);
        let numeric = finite_difference_gradient(&m, &rows, 1e-6);
        let err = max_relative_error(&analytic, &numeric, 1e-6);
        assert!(err < 1e-4, "{variant:?}: relative error {err}");
    }
}

#[test]
fn gmm_prefers_one_component_for_gaussian_data() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..500)
        .map(|_| vec![normal.sample(&mut rng), 2.0 * normal.sample(&mut rng) + 1.0])
        .collect();
    let m = GmmModel::fit(&rows, (1, 5), 0).unwrap();
    assert_eq!(m.n_components(), 1);
}

#[test]
fn em_log_likelihood_never_decreases() {
    for seed in 0..20u64 {
        let mut rows = random_rows(120, 2, 100 + seed);
        for r in rows.iter_mut().take(60) {
            r[0] += 3.0;
        }
        let fit = fit_em(&rows, 1 + (seed as usize % 4), seed).unwrap();
        for w in fit.log_likelihood.windows(2) {
            assert!(
                w[1] - w[0] >= -1e-9 * w[0].abs().max(1.0),
                "{} -> {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn pca_components_are_covariance_eigenvectors() {
    let mut rows = random_rows(200, 4, 8);
    for r in rows.iter_mut() {
        r[1] = 2.0 * r[0] + 0.1 * r[1];
    }
    let m = PcaModel::fit(&rows, PcaTarget::Count(4)).unwrap();
    let n = rows.len() as f64;
    let cov = |a: usize, b: usize| {
        rows.iter()
            .map(|r| (r[a] - m.mean[a]) * (r[b] - m.mean[b]))
            .sum::<f64>()
            / (n - 1.0)
    };
    let total: f64 = (0..4).map(|i| cov(i, i)).sum();
    for (c, ratio) in m.components.iter().zip(&m.explained_ratio) {
        let cv: Vec<f64> = (0..4)
            .map(|i| (0..4).map(|j| cov(i, j) * c[j]).sum())
            .collect();
        let lambda = ratio * total;
        for i in 0..4 {
            assert!((cv[i] - lambda * c[i]).abs() < 1e-9, "not an eigenpair");
        }
    }
    let latent: Vec<Vec<f64>> = rows.iter().map(|r| m.transform(r).unwrap()).collect();
    for a in 0..4 {
        for b in 0..a {
            let c: f64 = latent.iter().map(|h| h[a] * h[b]).sum::<f64>() / n;
            assert!(c.abs() < 1e-8 * total);
        }
    }
}
