//! One-class ν-SVM with an RBF kernel, solved by sequential minimal
//! optimization on the dual. Novelty is the signed margin distance, positive
//! on the origin side of the hyperplane.

use crate::persist::ModelDoc;
use crate::util::{row_width, sq_dist, variance};
use crate::{Error, Result};

pub const DEFAULT_NU: f64 = 0.05;
pub const KKT_TOL: f64 = 1e-4;
pub const MAX_SMO_ITERS: usize = 1_000_000;
/// Dual coefficients below this are dropped from the support set.
const SV_EPS: f64 = 1e-14;

pub fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

/// `1 / (d · mean column variance)`, or 1 when every column is constant.
pub fn default_gamma(rows: &[Vec<f64>]) -> f64 {
    let d = rows[0].len();
    let col_var = (0..d)
        .map(|j| variance(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .sum::<f64>()
        / d as f64;
    if col_var > 0.0 {
        1.0 / (d as f64 * col_var)
    } else {
        1.0
    }
}

/// Solution of `min ½ αᵀKα` subject to `0 ≤ α ≤ 1/(νn)` and `Σα = 1`.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
}

pub fn solve_dual(kernel: &[Vec<f64>], nu: f64) -> Result<DualSolution> {
    let n = kernel.len();
    let c = 1.0 / (nu * n as f64);
    // libsvm start: the first ⌊νn⌋ coefficients at the bound, remainder on the next
    let mut alpha = vec![0.0; n];
    let mut left = 1.0;
    for a in alpha.iter_mut() {
        let take = c.min(left);
        *a = take;
        left -= take;
        if left <= 0.0 {
            break;
        }
    }
    let mut grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| kernel[i][j] * alpha[j]).sum())
        .collect();
    let at_upper = |a: f64| a >= c * (1.0 - 1e-12);
    let mut iterations = 0;
    loop {
        // maximal violating pair: raise i (smallest gradient), lower j (largest)
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        let (mut gi, mut gj) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in 0..n {
            if !at_upper(alpha[t]) && grad[t] < gi {
                gi = grad[t];
                i = t;
            }
            if alpha[t] > 0.0 && grad[t] > gj {
                gj = grad[t];
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gj - gi <= KKT_TOL {
            break;
        }
        if iterations >= MAX_SMO_ITERS {
            return Err(Error::NotConverged {
                iterations,
                residual: gj - gi,
            });
        }
        iterations += 1;
        let curvature = (kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j]).max(1e-12);
        let delta = ((gj - gi) / curvature).min(c - alpha[i]).min(alpha[j]);
        alpha[i] += delta;
        alpha[j] -= delta;
        if c - alpha[i] < 1e-15 * c {
            alpha[i] = c;
        }
        if alpha[j] < 1e-15 * c {
            alpha[j] = 0.0;
        }
        for (t, g) in grad.iter_mut().enumerate() {
            *g += delta * (kernel[t][i] - kernel[t][j]);
        }
    }
    let free: Vec<f64> = (0..n)
        .filter(|&t| alpha[t] > 0.0 && !at_upper(alpha[t]))
        .map(|t| grad[t])
        .collect();
    let rho = if free.is_empty() {
        let ub = (0..n)
            .filter(|&t| at_upper(alpha[t]))
            .map(|t| grad[t])
            .fold(f64::NEG_INFINITY, f64::max);
        let lb = (0..n)
            .filter(|&t| alpha[t] == 0.0)
            .map(|t| grad[t])
            .fold(f64::INFINITY, f64::min);
        match (ub.is_finite(), lb.is_finite()) {
            (true, true) => 0.5 * (ub + lb),
            (true, false) => ub,
            (false, true) => lb,
            (false, false) => 0.0,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * g).sum::<f64>();
    Ok(DualSolution {
        alpha,
        rho,
        objective,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcsvmModel {
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub rho: f64,
    pub gamma: f64,
    pub nu: f64,
    /// RKHS norm of the hyperplane normal, `sqrt(αᵀKα)`.
    pub w_norm: f64,
}

impl OcsvmModel {
    pub fn fit(rows: &[Vec<f64>], nu: f64, gamma: Option<f64>) -> Result<Self> {
        row_width(rows)?;
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::invalid(format!("nu = {nu} must lie in (0, 1]")));
        }
        let gamma = match gamma {
            Some(g) if g > 0.0 && g.is_finite() => g,
            Some(g) => return Err(Error::invalid(format!("gamma = {g} must be positive"))),
            None => default_gamma(rows),
        };
        let kernel: Vec<Vec<f64>> = rows
            .iter()
            .map(|a| rows.iter().map(|b| rbf(gamma, a, b)).collect())
            .collect();
        let sol = solve_dual(&kernel, nu)?;
        let keep: Vec<usize> = (0..rows.len()).filter(|&i| sol.alpha[i] > SV_EPS).collect();
        let w_norm = (2.0 * sol.objective).max(0.0).sqrt();
        if !(w_norm > 0.0) {
            return Err(Error::Degenerate(
                "one-class SVM solution has zero norm".into(),
            ));
        }
        Ok(Self {
            support: keep.iter().map(|&i| rows[i].clone()).collect(),
            coef: keep.iter().map(|&i| sol.alpha[i]).collect(),
            rho: sol.rho,
            gamma,
            nu,
            w_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.support[0].len()
    }

    /// `Σ αᵢ k(xᵢ, v) − ρ`, positive inside the learned region.
    pub fn decision(&self, v: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * rbf(self.gamma, s, v))
            .sum::<f64>()
            - self.rho
    }

    pub fn score(&self, v: &[f64]) -> f64 {
        -self.decision(v) / self.w_norm
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("ocsvm");
        doc.scalar("nu", self.nu)
            .scalar("gamma", self.gamma)
            .scalar("rho", self.rho)
            .scalar("w_norm", self.w_norm)
            .vector("coef", &self.coef)
            .matrix("support", &self.support);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("ocsvm")?;
        let m = Self {
            nu: doc.get_scalar("nu")?,
            gamma: doc.get_scalar("gamma")?,
            rho: doc.get_scalar("rho")?,
            w_norm: doc.get_scalar("w_norm")?,
            coef: doc.get_vector("coef")?,
            support: doc.get_matrix("support")?,
        };
        if m.support.is_empty() || m.support.len() != m.coef.len() {
            return Err(Error::parse(0, "ocsvm model: inconsistent support set"));
        }
        Ok(m)
    }
}
