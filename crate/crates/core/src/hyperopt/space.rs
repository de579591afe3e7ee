//! Mixed search spaces mapped onto the unit cube.

use rand::Rng;

use crate::util::Rng as SeededRng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// Inclusive integer range, relaxed to a continuum and rounded.
    Int { lo: i64, hi: i64 },
    /// A finite set of numeric choices.
    Categorical(Vec<f64>),
    /// Real range searched on a log scale.
    LogUniform { lo: f64, hi: f64 },
    /// Real range searched linearly.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

impl Param {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        Self {
            name: name.into(),
            domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub params: Vec<Param>,
}

impl SearchSpace {
    pub fn new(params: Vec<Param>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::invalid("search space has no parameters"));
        }
        for p in &params {
            let ok = match &p.domain {
                Domain::Int { lo, hi } => lo <= hi,
                Domain::Categorical(c) => !c.is_empty() && c.iter().all(|v| v.is_finite()),
                Domain::LogUniform { lo, hi } => *lo > 0.0 && lo <= hi && hi.is_finite(),
                Domain::Uniform { lo, hi } => lo <= hi && lo.is_finite() && hi.is_finite(),
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "parameter '{}' has an empty domain",
                    p.name
                )));
            }
            if p.name.is_empty() || p.name.contains([',', '\n', '=']) {
                return Err(Error::invalid(format!(
                    "invalid parameter name '{}'",
                    p.name
                )));
            }
        }
        Ok(Self { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    /// Maps a unit-cube point to a valid assignment (rounded where discrete).
    pub fn decode(&self, u: &[f64]) -> Vec<f64> {
        self.params
            .iter()
            .zip(u)
            .map(|(p, &x)| {
                let x = x.clamp(0.0, 1.0);
                match &p.domain {
                    Domain::Int { lo, hi } => (*lo as f64 + x * (hi - lo) as f64).round(),
                    Domain::Categorical(c) => c[((x * c.len() as f64) as usize).min(c.len() - 1)],
                    Domain::LogUniform { lo, hi } => {
                        (lo.ln() + x * (hi.ln() - lo.ln())).exp().clamp(*lo, *hi)
                    }
                    Domain::Uniform { lo, hi } => lo + x * (hi - lo),
                }
            })
            .collect()
    }

    /// Inverse of [`decode`](Self::decode) on valid assignments.
    pub fn encode(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: values.len(),
            });
        }
        self.params
            .iter()
            .zip(values)
            .map(|(p, &v)| {
                let span =
                    |lo: f64, hi: f64, v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let u = match &p.domain {
                    Domain::Int { lo, hi } => span(*lo as f64, *hi as f64, v),
                    Domain::Categorical(c) => {
                        let i = c.iter().position(|x| *x == v).ok_or_else(|| {
                            Error::invalid(format!("{} = {v} is not a listed choice", p.name))
                        })?;
                        (i as f64 + 0.5) / c.len() as f64
                    }
                    Domain::LogUniform { lo, hi } => {
                        if v <= 0.0 {
                            return Err(Error::invalid(format!(
                                "{} = {v} must be positive",
                                p.name
                            )));
                        }
                        span(lo.ln(), hi.ln(), v.ln())
                    }
                    Domain::Uniform { lo, hi } => span(*lo, *hi, v),
                };
                if !(-1e-9..=1.0 + 1e-9).contains(&u) {
                    return Err(Error::invalid(format!(
                        "{} = {v} lies outside its domain",
                        p.name
                    )));
                }
                Ok(u.clamp(0.0, 1.0))
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut SeededRng) -> Vec<f64> {
        let u: Vec<f64> = (0..self.dim()).map(|_| rng.random::<f64>()).collect();
        self.decode(&u)
    }
}
