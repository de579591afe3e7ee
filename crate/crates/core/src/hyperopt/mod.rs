//! Gaussian-process Bayesian optimization over small mixed search spaces.
//!
//! Trials run sequentially. Each trial draws its own random stream from
//! `(seed, trial index)`, so a resumed study continues exactly as an
//! uninterrupted one would.

pub mod gp;
pub mod space;
pub mod tuning;

use std::io::{BufRead, BufReader, Read, Write};

use crate::util::{derive_seed, rng, Rng as SeededRng};
use crate::{Error, Result};

pub use gp::{expected_improvement, GpSurrogate};
pub use space::{Domain, Param, SearchSpace};

pub const N_CANDIDATES: usize = 1024;
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub params: Vec<f64>,
    /// Objective value; `+∞` for failed trials.
    pub j: f64,
    pub status: TrialStatus,
}

impl Trial {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }
}

/// Proposes the next assignment given the trials so far.
///
/// With fewer than `d + 1` successful trials the draw is uniform; otherwise
/// the candidate with the largest expected improvement wins. Candidates that
/// round to an already tried assignment are skipped.
pub fn suggest(space: &SearchSpace, trials: &[Trial], rng: &mut SeededRng) -> Result<Vec<f64>> {
    let ok: Vec<&Trial> = trials.iter().filter(|t| t.is_ok()).collect();
    if ok.len() < space.dim() + 1 {
        return Ok(space.sample(rng));
    }
    let x = ok
        .iter()
        .map(|t| space.encode(&t.params))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = ok.iter().map(|t| t.j).collect();
    let gp = GpSurrogate::fit(&x, &y)?;
    let best = y.iter().copied().fold(f64::INFINITY, f64::min);
    let mut pick: Option<(f64, Vec<f64>)> = None;
    for _ in 0..N_CANDIDATES {
        let cand = space.sample(rng);
        if trials.iter().any(|t| t.params == cand) {
            continue;
        }
        let (m, s) = gp.predict(&space.encode(&cand)?);
        let ei = expected_improvement(m, s, best);
        if pick.as_ref().is_none_or(|p| ei > p.0) {
            pick = Some((ei, cand));
        }
    }
    Ok(pick.map(|p| p.1).unwrap_or_else(|| space.sample(rng)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub names: Vec<String>,
    pub trials: Vec<Trial>,
}

impl Study {
    pub fn new(space: &SearchSpace) -> Self {
        Self {
            names: space.names().iter().map(|s| s.to_string()).collect(),
            trials: Vec::new(),
        }
    }

    /// The trial with the lowest objective among successful ones.
    pub fn best(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .filter(|t| t.is_ok())
            .fold(None, |b: Option<&Trial>, t| {
                if b.is_none_or(|b| t.j < b.j) {
                    Some(t)
                } else {
                    b
                }
            })
    }

    /// Best objective seen after each trial (`+∞` until the first success).
    pub fn incumbent_curve(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trials
            .iter()
            .map(|t| {
                if t.is_ok() && t.j < best {
                    best = t.j;
                }
                best
            })
            .collect()
    }

    pub fn write_history<W: Write>(&self, mut w: W) -> Result<()> {
        let cols: Vec<String> = self.names.iter().map(|n| format!("param:{n}")).collect();
        writeln!(w, "trial,{},J,status", cols.join(","))?;
        for (i, t) in self.trials.iter().enumerate() {
            let p: Vec<String> = t.params.iter().map(|v| v.to_string()).collect();
            let status = match &t.status {
                TrialStatus::Ok => "ok".to_string(),
                TrialStatus::Failed(m) => format!("failed: {}", m.replace([',', '\n', '\r'], ";")),
            };
            writeln!(w, "{i},{},{},{status}", p.join(","), t.j)?;
        }
        Ok(())
    }

    pub fn read_history<R: Read>(r: R) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty history"))??;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3
            || cols[0] != "trial"
            || cols[cols.len() - 2] != "J"
            || cols[cols.len() - 1] != "status"
        {
            return Err(Error::parse(
                1,
                "history header must be trial,param:*,J,status",
            ));
        }
        let names = cols[1..cols.len() - 2]
            .iter()
            .map(|c| {
                c.strip_prefix("param:")
                    .map(str::to_string)
                    .ok_or_else(|| Error::parse(1, format!("column '{c}' lacks the param: prefix")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut trials = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let n = i + 2;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::parse(
                    n,
                    format!("expected {} fields, found {}", cols.len(), f.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::parse(n, format!("bad number '{s}'")))
            };
            let params = f[1..f.len() - 2]
                .iter()
                .map(|s| num(s))
                .collect::<Result<Vec<_>>>()?;
            let j = num(f[f.len() - 2])?;
            let status = match f[f.len() - 1] {
                "ok" => TrialStatus::Ok,
                s => TrialStatus::Failed(s.strip_prefix("failed: ").unwrap_or(s).to_string()),
            };
            trials.push(Trial { params, j, status });
        }
        Ok(Self { names, trials })
    }
}

/// Runs `n_trials` more trials on top of `study`. A failed objective (error or
/// non-finite value) is recorded with `J = +∞` and excluded from the surrogate.
pub fn optimize_from<F>(
    space: &SearchSpace,
    mut study: Study,
    n_trials: usize,
    seed: u64,
    mut objective: F,
) -> Result<Study>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if study.names.iter().map(String::as_str).ne(space.names()) {
        return Err(Error::invalid(
            "history parameters do not match the search space",
        ));
    }
    for _ in 0..n_trials {
        let idx = study.trials.len();
        let mut r = rng(derive_seed(seed, &format!("trial{idx}")));
        let params = suggest(space, &study.trials, &mut r)?;
        let trial = match objective(&params) {
            Ok(j) if j.is_finite() => Trial {
                params,
                j,
                status: TrialStatus::Ok,
            },
            Ok(j) => Trial {
                params,
                j: f64::INFINITY,
                status: TrialStatus::Failed(format!("objective returned {j}")),
            },
            Err(e) => Trial {
                params,
                j: f64::INFINITY,
                status: TrialStatus::Failed(e.to_string()),
            },
        };
        study.trials.push(trial);
    }
    if study.best().is_none() {
        return Err(Error::Failed("every trial failed".into()));
    }
    Ok(study)
}

pub fn optimize<F>(space: &SearchSpace, n_trials: usize, seed: u64, objective: F) -> Result<Study>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if n_trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    optimize_from(space, Study::new(space), n_trials, seed, objective)
}
