//! Brute-force reference implementations shared by the integration tests and
//! the acceptance runner. Each one follows the textbook definition directly.

#![allow(dead_code)]

use novelbench::detectors::ocsvm::rbf;
use novelbench::transform::autoencoder::AeModel;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Mean, RMS, peak-to-peak, std, skewness and excess kurtosis with two-pass sums.
pub fn stat_oracle(x: &[f64]) -> [f64; 6] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let max = x.iter().cloned().fold(f64::MIN, f64::max);
    let min = x.iter().cloned().fold(f64::MAX, f64::min);
    let central = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
    let var = central(2);
    let std = var.sqrt();
    [
        mean,
        rms,
        max - min,
        std,
        central(3) / std.powi(3),
        central(4) / (var * var) - 3.0,
    ]
}

/// Mean silhouette straight from the pairwise distance definitions.
pub fn silhouette_oracle(rows: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let members = |c: usize| (0..n).filter(move |&j| labels[j] == c && j != i);
        let own: Vec<usize> = members(labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| euclid(&rows[i], &rows[j])).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for c in (0..k).filter(|&c| c != labels[i]) {
            let other: Vec<usize> = members(c).collect();
            if !other.is_empty() {
                let m = other
                    .iter()
                    .map(|&j| euclid(&rows[i], &rows[j]))
                    .sum::<f64>()
                    / other.len() as f64;
                b = b.min(m);
            }
        }
        if a.max(b) > 0.0 {
            total += (b - a) / a.max(b);
        }
    }
    total / n as f64
}

/// Indices of the `k` nearest training points, excluding `skip`.
fn neighbours(train: &[Vec<f64>], v: &[f64], k: usize, skip: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..train.len()).filter(|&j| Some(j) != skip).collect();
    idx.sort_by(|&a, &b| {
        euclid(&train[a], v)
            .partial_cmp(&euclid(&train[b], v))
            .unwrap()
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Novelty-mode LOF of `query` against `train`.
pub fn lof_oracle(train: &[Vec<f64>], k: usize, query: &[f64]) -> f64 {
    let k_dist = |j: usize| {
        let nn = neighbours(train, &train[j], k, Some(j));
        euclid(&train[j], &train[*nn.last().unwrap()])
    };
    let lrd = |v: &[f64], skip: Option<usize>| {
        let nn = neighbours(train, v, k, skip);
        let reach: f64 = nn
            .iter()
            .map(|&o| euclid(v, &train[o]).max(k_dist(o)))
            .sum();
        k as f64 / reach
    };
    let nn = neighbours(train, query, k, None);
    let own = lrd(query, None);
    nn.iter().map(|&o| lrd(&train[o], Some(o))).sum::<f64>() / (k as f64 * own)
}

/// Core flags and noise flags from the closed-ball definition.
pub fn dbscan_oracle(rows: &[Vec<f64>], eps: f64, min_pts: usize) -> (Vec<bool>, Vec<bool>) {
    let n = rows.len();
    let core: Vec<bool> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| euclid(&rows[i], &rows[j]) <= eps)
                .count()
                >= min_pts
        })
        .collect();
    let noise = (0..n)
        .map(|i| !core[i] && !(0..n).any(|j| core[j] && euclid(&rows[i], &rows[j]) <= eps))
        .collect();
    (core, noise)
}

/// Connected components of core points under the `eps` relation.
pub fn core_components(rows: &[Vec<f64>], core: &[bool], eps: f64) -> Vec<Option<usize>> {
    let n = rows.len();
    let mut comp = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || comp[s].is_some() {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = Some(next);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if core[j] && comp[j].is_none() && euclid(&rows[i], &rows[j]) <= eps {
                    comp[j] = Some(next);
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Minimizes `½ αᵀKα` over `0 ≤ α ≤ 1/(νn)`, `Σα = 1` for four points by a
/// coarse grid followed by successively finer local grids.
pub fn ocsvm_grid_oracle(points: &[Vec<f64>], gamma: f64, nu: f64) -> (Vec<f64>, f64) {
    assert_eq!(points.len(), 4);
    let c = 1.0 / (nu * 4.0);
    let k: Vec<Vec<f64>> = points
        .iter()
        .map(|a| points.iter().map(|b| rbf(gamma, a, b)).collect())
        .collect();
    let objective = |a: &[f64; 4]| {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += a[i] * a[j] * k[i][j];
            }
        }
        0.5 * s
    };
    let mut best = ([0.25; 4], f64::INFINITY);
    let mut centre = [c / 2.0; 3];
    let mut half = c / 2.0;
    let steps = 40;
    for _ in 0..8 {
        let h = 2.0 * half / steps as f64;
        let mut round_best = best;
        for i in 0..=steps {
            for j in 0..=steps {
                for l in 0..=steps {
                    let a0 = centre[0] - half + i as f64 * h;
                    let a1 = centre[1] - half + j as f64 * h;
                    let a2 = centre[2] - half + l as f64 * h;
                    let a3 = 1.0 - a0 - a1 - a2;
                    let a = [a0, a1, a2, a3];
                    if a.iter().any(|&x| !(-1e-15..=c + 1e-15).contains(&x)) {
                        continue;
                    }
                    let f = objective(&a);
                    if f < round_best.1 {
                        round_best = (a, f);
                    }
                }
            }
        }
        best = round_best;
        centre = [best.0[0], best.0[1], best.0[2]];
        half *= 0.25;
    }
    (best.0.to_vec(), best.1)
}

/// Central finite-difference gradient of the mean reconstruction loss.
pub fn finite_difference_gradient(model: &AeModel, rows: &[Vec<f64>], h: f64) -> Vec<f64> {
    let mut m = model.clone();
    (0..m.n_params())
        .map(|i| {
            let p = m.param(i);
            m.set_param(i, p + h);
            let up = m.loss(rows);
            m.set_param(i, p - h);
            let down = m.loss(rows);
            m.set_param(i, p);
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst relative error between two gradients, with a floor on the scale so
/// that near-zero entries are compared absolutely.
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
