//! Gaussian-process surrogate with a squared-exponential ARD kernel and the
//! expected-improvement acquisition.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::{Error, Result};

pub const JITTER: f64 = 1e-8;
const LENGTH_GRID: [f64; 10] = [0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0];

fn kernel(ls: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .zip(ls)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum();
    (-0.5 * s).exp()
}

#[derive(Debug, Clone)]
pub struct GpSurrogate {
    x: Vec<Vec<f64>>,
    pub length_scales: Vec<f64>,
    /// Diagonal jitter actually used (grows when factorization fails).
    pub jitter: f64,
    y_mean: f64,
    y_scale: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

struct Factor {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

fn factor(x: &[Vec<f64>], y: &DVector<f64>, ls: &[f64]) -> Option<Factor> {
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| kernel(ls, &x[i], &x[j]));
    let mut jitter = JITTER;
    while jitter <= 1e-2 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            let alpha = chol.solve(y);
            return Some(Factor {
                chol,
                alpha,
                jitter,
            });
        }
        jitter *= 10.0;
    }
    None
}

fn log_marginal(f: &Factor, y: &DVector<f64>) -> f64 {
    let log_det: f64 = f
        .chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| d.ln())
        .sum::<f64>()
        * 2.0;
    -0.5 * y.dot(&f.alpha) - 0.5 * log_det
}

impl GpSurrogate {
    /// Fits length scales by maximizing the marginal likelihood over a grid:
    /// a shared scale first, then one coordinate sweep per dimension.
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::InsufficientData(
                "GP needs matching, nonempty inputs".into(),
            ));
        }
        let d = x[0].len();
        let n = y.len() as f64;
        let y_mean = y.iter().sum::<f64>() / n;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n).sqrt();
        let y_scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));

        let score = |ls: &[f64]| factor(x, &ys, ls).map(|f| log_marginal(&f, &ys));
        let mut best_ls = vec![LENGTH_GRID[0]; d];
        let mut best = f64::NEG_INFINITY;
        for &l in &LENGTH_GRID {
            let ls = vec![l; d];
            if let Some(s) = score(&ls) {
                if s > best {
                    best = s;
                    best_ls = ls;
                }
            }
        }
        for dim in 0..d {
            for &l in &LENGTH_GRID {
                let mut ls = best_ls.clone();
                ls[dim] = l;
                if let Some(s) = score(&ls) {
                    if s > best {
                        best = s;
                        best_ls = ls;
                    }
                }
            }
        }
        let f = factor(x, &ys, &best_ls)
            .ok_or_else(|| Error::Degenerate("GP kernel matrix is not positive definite".into()))?;
        Ok(Self {
            x: x.to_vec(),
            length_scales: best_ls,
            jitter: f.jitter,
            y_mean,
            y_scale,
            chol: f.chol,
            alpha: f.alpha,
        })
    }

    /// Posterior mean and standard deviation in the original objective units.
    pub fn predict(&self, v: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| kernel(&self.length_scales, xi, v)),
        );
        let mean = k.dot(&self.alpha);
        let w = self
            .chol
            .l()
            .solve_lower_triangular(&k)
            .expect("triangular factor is invertible");
        let var = (1.0 - w.dot(&w)).max(0.0);
        (self.y_mean + self.y_scale * mean, self.y_scale * var.sqrt())
    }

    pub fn n_obs(&self) -> usize {
        self.x.len()
    }
}

/// Expected reduction below `best` for a Gaussian prediction `(mean, sd)`.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let gain = best - mean;
    if !(sd > 0.0) {
        return gain.max(0.0);
    }
    let z = gain / sd;
    let n = Normal::standard();
    (gain * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_observations() {
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0]).collect();
        let y: Vec<f64> = x.iter().map(|v| (6.0 * v[0]).sin() + v[0]).collect();
        let gp = GpSurrogate::fit(&x, &y).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            let (m, s) = gp.predict(xi);
            assert!((m - yi).abs() < 1e-6, "{m} vs {yi}");
            assert!(s < 1e-3);
        }
    }

    #[test]
    fn ei_properties() {
        assert_eq!(expected_improvement(1.0, 0.0, 1.0), 0.0);
        assert_eq!(expected_improvement(2.0, 0.0, 1.0), 0.0);
        assert_eq!(expected_improvement(0.5, 0.0, 1.0), 0.5);
        assert!(expected_improvement(2.0, 1.0, 1.0) > 0.0);
        assert!(expected_improvement(2.0, 1e-6, 1.0) < 1e-12);
    }
}
