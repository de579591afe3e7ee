//! Full-covariance Gaussian mixture fitted by EM, with the component count
//! chosen by BIC. Novelty is the negative log-likelihood of the mixture.

use std::f64::consts::TAU;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::kmeans::kmeans_pp;
use crate::persist::ModelDoc;
use crate::util::{check_dim, rng, row_width, sq_dist};
use crate::{Error, Result};

pub const REG_COVAR: f64 = 1e-6;
pub const MAX_EM_ITERS: usize = 500;
pub const EM_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// Lower Cholesky factor of `cov`.
    chol: DMatrix<f64>,
    log_det: f64,
}

impl Component {
    fn new(weight: f64, mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::<f64, Dyn>::new(cov.clone())
            .ok_or_else(|| {
                Error::Degenerate("covariance is singular even after regularization".into())
            })?
            .l();
        let log_det = 2.0 * chol.diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(Self {
            weight,
            mean,
            cov,
            chol,
            log_det,
        })
    }

    fn log_density(&self, v: &[f64]) -> f64 {
        let d = self.mean.len();
        // forward substitution L y = v − μ
        let mut y = vec![0.0; d];
        let mut maha = 0.0;
        for i in 0..d {
            let mut s = v[i] - self.mean[i];
            for (j, yj) in y.iter().enumerate().take(i) {
                s -= self.chol[(i, j)] * yj;
            }
            y[i] = s / self.chol[(i, i)];
            maha += y[i] * y[i];
        }
        -0.5 * (d as f64 * TAU.ln() + self.log_det + maha)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// One EM run for a fixed component count.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: GmmModel,
    /// Total log-likelihood after every E-step.
    pub log_likelihood: Vec<f64>,
}

fn m_step(rows: &[Vec<f64>], resp: &[Vec<f64>], k: usize) -> Result<Vec<Component>> {
    let n = rows.len();
    let d = rows[0].len();
    (0..k)
        .map(|c| {
            let nk: f64 = resp.iter().map(|r| r[c]).sum::<f64>() + 10.0 * f64::EPSILON;
            let mut mean = DVector::zeros(d);
            for (x, r) in rows.iter().zip(resp) {
                for (m, v) in mean.iter_mut().zip(x) {
                    *m += r[c] * v;
                }
            }
            mean /= nk;
            let mut cov = DMatrix::zeros(d, d);
            let mut diff = DVector::zeros(d);
            for (x, r) in rows.iter().zip(resp) {
                if r[c] == 0.0 {
                    continue;
                }
                for i in 0..d {
                    diff[i] = x[i] - mean[i];
                }
                cov.ger(r[c], &diff, &diff, 1.0);
            }
            cov /= nk;
            for i in 0..d {
                cov[(i, i)] += REG_COVAR;
            }
            Component::new(nk / n as f64, mean, cov)
        })
        .collect()
}

/// E-step: fills responsibilities and returns the total log-likelihood.
fn e_step(rows: &[Vec<f64>], comps: &[Component], resp: &mut [Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    let mut logp = vec![0.0; comps.len()];
    for (x, r) in rows.iter().zip(resp.iter_mut()) {
        for (lp, c) in logp.iter_mut().zip(comps) {
            *lp = c.weight.ln() + c.log_density(x);
        }
        let norm = log_sum_exp(&logp);
        ll += norm;
        for (ri, lp) in r.iter_mut().zip(&logp) {
            *ri = (lp - norm).exp();
        }
    }
    ll
}

/// EM from k-means++ hard responsibilities.
pub fn fit_em(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<EmFit> {
    let d = row_width(rows)?;
    if k == 0 || rows.len() < 2 * k {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot support {k} components",
            rows.len()
        )));
    }
    let mut rng = rng(seed);
    let seeds = kmeans_pp(rows, k, &mut rng);
    let mut resp: Vec<Vec<f64>> = rows
        .iter()
        .map(|x| {
            let best = seeds
                .iter()
                .enumerate()
                .map(|(i, s)| (i, sq_dist(s, x)))
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
                .0;
            let mut r = vec![0.0; k];
            r[best] = 1.0;
            r
        })
        .collect();
    let mut comps = m_step(rows, &resp, k)?;
    let mut history = vec![e_step(rows, &comps, &mut resp)];
    for _ in 0..MAX_EM_ITERS {
        comps = m_step(rows, &resp, k)?;
        let ll = e_step(rows, &comps, &mut resp);
        let prev = *history.last().expect("nonempty");
        history.push(ll);
        if (ll - prev).abs() <= EM_TOL * ll.abs().max(1.0) {
            break;
        }
    }
    let ll = *history.last().expect("nonempty");
    let n = rows.len() as f64;
    let n_params = (k - 1) + k * d + k * d * (d + 1) / 2;
    let bic = -2.0 * ll + n_params as f64 * n.ln();
    Ok(EmFit {
        model: GmmModel {
            components: comps,
            bic,
            log_likelihood: ll,
        },
        log_likelihood: history,
    })
}

#[derive(Debug, Clone)]
pub struct GmmModel {
    components: Vec<Component>,
    pub bic: f64,
    pub log_likelihood: f64,
}

impl PartialEq for GmmModel {
    fn eq(&self, other: &Self) -> bool {
        self.bic == other.bic
            && self.components.len() == other.components.len()
            && self
                .components
                .iter()
                .zip(&other.components)
                .all(|(a, b)| a.weight == b.weight && a.mean == b.mean && a.cov == b.cov)
    }
}

impl GmmModel {
    /// Fits every component count in `k_range` and keeps the lowest BIC.
    pub fn fit(rows: &[Vec<f64>], k_range: (usize, usize), seed: u64) -> Result<Self> {
        let (lo, hi) = k_range;
        if lo == 0 || lo > hi {
            return Err(Error::invalid(format!(
                "component range {lo}..={hi} is empty"
            )));
        }
        if rows.len() < 2 * hi {
            return Err(Error::InsufficientData(format!(
                "{} rows; need at least {} for up to {hi} components",
                rows.len(),
                2 * hi
            )));
        }
        let mut best: Option<GmmModel> = None;
        let mut last_err = None;
        for k in lo..=hi {
            match fit_em(rows, k, seed.wrapping_add(k as u64)) {
                Ok(fit) => {
                    if best.as_ref().is_none_or(|b| fit.model.bic < b.bic) {
                        best = Some(fit.model);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Failed("no GMM fitted".into())))
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.components
            .iter()
            .map(|c| c.mean.iter().copied().collect())
            .collect()
    }

    pub fn covariance(&self, k: usize) -> &DMatrix<f64> {
        &self.components[k].cov
    }

    pub fn log_det(&self, k: usize) -> f64 {
        self.components[k].log_det
    }

    /// Mixture log-density at `v`.
    pub fn log_pdf(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(-self.score(v))
    }

    /// Negative log-likelihood of `v` under the mixture.
    pub fn score(&self, v: &[f64]) -> f64 {
        let logp: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.weight.ln() + c.log_density(v))
            .collect();
        let ll = log_sum_exp(&logp);
        if ll.is_finite() {
            -ll
        } else {
            f64::MAX
        }
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("gmm");
        doc.scalar("k", self.n_components() as f64)
            .scalar("bic", self.bic)
            .scalar("log_likelihood", self.log_likelihood)
            .vector("weights", &self.weights())
            .matrix("means", &self.means());
        for (i, c) in self.components.iter().enumerate() {
            let d = c.cov.nrows();
            let data = (0..d)
                .flat_map(|r| (0..d).map(move |s| (r, s)))
                .map(|(r, s)| c.cov[(r, s)])
                .collect();
            doc.block(&format!("cov{i}"), d, d, data);
        }
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("gmm")?;
        let k = doc.get_usize("k")?;
        let weights = doc.get_vector("weights")?;
        let means = doc.get_matrix("means")?;
        if weights.len() != k || means.len() != k || k == 0 {
            return Err(Error::parse(0, "gmm model: inconsistent component count"));
        }
        let components = (0..k)
            .map(|i| {
                let (r, c, data) = doc.get_block(&format!("cov{i}"))?;
                if r != c || r != means[i].len() {
                    return Err(Error::parse(0, format!("gmm cov{i}: bad shape")));
                }
                Component::new(
                    weights[i],
                    DVector::from_vec(means[i].clone()),
                    DMatrix::from_row_slice(r, c, data),
                )
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            components,
            bic: doc.get_scalar("bic")?,
            log_likelihood: doc.get_scalar("log_likelihood")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn gaussian(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let g = Normal::new(0.0, 1.0).unwrap();
        (0..n)
            .map(|_| (0..d).map(|_| g.sample(&mut r)).collect())
            .collect()
    }

    #[test]
    fn single_component_is_regularized_mle() {
        let rows = gaussian(200, 3, 1);
        let fit = fit_em(&rows, 1, 0).unwrap();
        let m = &fit.model;
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        for (a, b) in m.means()[0].iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9);
        }
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = rows
                    .iter()
                    .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                    .sum::<f64>()
                    / n;
                let want = s + if i == j { REG_COVAR } else { 0.0 };
                assert!((m.covariance(0)[(i, j)] - want).abs() < 1e-9);
            }
        }
        assert!((m.weights()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nm_minimized_at_mean_with_closed_form() {
        let rows = gaussian(100, 2, 4);
        let m = fit_em(&rows, 1, 0).unwrap().model;
        let mu = m.means()[0].clone();
        let at_mu = m.score(&mu);
        let closed = -m.weights()[0].ln() + 0.5 * (2.0 * TAU.ln() + m.log_det(0));
        assert!((at_mu - closed).abs() < 1e-9);
        for dx in [-0.1, 0.1] {
            assert!(m.score(&[mu[0] + dx, mu[1]]) > at_mu);
        }
    }

    #[test]
    fn em_log_likelihood_is_monotone() {
        let mut rows = gaussian(150, 2, 7);
        rows.extend(
            gaussian(150, 2, 8)
                .into_iter()
                .map(|r| vec![r[0] + 6.0, r[1] - 3.0]),
        );
        let fit = fit_em(&rows, 3, 2).unwrap();
        for w in fit.log_likelihood.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
        }
        let sum: f64 = fit.model.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn far_point_grows_quadratically() {
        let rows = gaussian(300, 1, 3);
        let m = fit_em(&rows, 1, 0).unwrap().model;
        let mu = m.means()[0][0];
        let s = |t: f64| m.score(&[mu + t]);
        let (a, b, c) = (s(10.0), s(20.0), s(40.0));
        // a quadratic in t: doubling the offset quadruples the growth
        assert!(((c - b) / (b - a) - 4.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_rows() {
        let rows = gaussian(5, 2, 0);
        assert!(GmmModel::fit(&rows, (1, 3), 0).is_err());
    }
}
