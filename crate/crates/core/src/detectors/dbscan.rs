//! DBSCAN on the training latents; novelty is the distance to the nearest
//! non-noise training point in units of `ε`.

use std::collections::VecDeque;

use crate::persist::ModelDoc;
use crate::util::{dist, percentile, row_width};
use crate::{Error, Result};

pub const DEFAULT_MIN_PTS: usize = 5;
/// Percentile of the MinPts-NN distances used when `ε` is not given.
pub const EPS_PERCENTILE: f64 = 90.0;

/// Cluster labels; `None` marks noise. A point is core when its closed
/// `ε`-ball holds at least `min_pts` points, itself included.
pub fn dbscan_labels(rows: &[Vec<f64>], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = rows.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| dist(&rows[i], &rows[j]) <= eps)
                .collect()
        })
        .collect();
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut cluster = 0;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        if neighbours[i].len() < min_pts {
            continue;
        }
        labels[i] = Some(cluster);
        let mut queue: VecDeque<usize> = neighbours[i].iter().copied().collect();
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if visited[j] {
                continue;
            }
            visited[j] = true;
            if neighbours[j].len() >= min_pts {
                queue.extend(neighbours[j].iter().copied());
            }
        }
        cluster += 1;
    }
    labels
}

/// `ε` from the k-distance heuristic: the given percentile of every point's
/// distance to its `min_pts`-th nearest other point.
pub fn heuristic_eps(rows: &[Vec<f64>], min_pts: usize) -> f64 {
    let kd: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut d: Vec<f64> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, o)| dist(r, o))
                .collect();
            d.sort_by(f64::total_cmp);
            d[min_pts - 1]
        })
        .collect();
    let eps = percentile(&kd, EPS_PERCENTILE);
    if eps > 0.0 {
        eps
    } else {
        kd.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbscanModel {
    /// Training points not labelled as noise.
    pub retained: Vec<Vec<f64>>,
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanModel {
    pub fn fit(rows: &[Vec<f64>], eps: Option<f64>, min_pts: usize) -> Result<Self> {
        row_width(rows)?;
        if min_pts == 0 || rows.len() <= min_pts {
            return Err(Error::InsufficientData(format!(
                "DBSCAN needs more than MinPts = {min_pts} rows, got {}",
                rows.len()
            )));
        }
        let eps = match eps {
            Some(e) if e > 0.0 && e.is_finite() => e,
            Some(e) => return Err(Error::invalid(format!("eps {e} must be positive"))),
            None => heuristic_eps(rows, min_pts),
        };
        if !(eps > 0.0) {
            return Err(Error::Degenerate(
                "all training points coincide; eps would be 0".into(),
            ));
        }
        let labels = dbscan_labels(rows, eps, min_pts);
        let retained: Vec<Vec<f64>> = rows
            .iter()
            .zip(&labels)
            .filter(|(_, l)| l.is_some())
            .map(|(r, _)| r.clone())
            .collect();
        if retained.is_empty() {
            return Err(Error::Degenerate(format!(
                "every training point is noise at eps = {eps}; use a larger eps"
            )));
        }
        Ok(Self {
            retained,
            eps,
            min_pts,
        })
    }

    pub fn dim(&self) -> usize {
        self.retained[0].len()
    }

    pub fn score(&self, v: &[f64]) -> f64 {
        let min = self
            .retained
            .iter()
            .map(|r| dist(r, v))
            .fold(f64::INFINITY, f64::min);
        min / self.eps
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("dbscan");
        doc.scalar("eps", self.eps)
            .scalar("min_pts", self.min_pts as f64)
            .matrix("retained", &self.retained);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("dbscan")?;
        let m = Self {
            eps: doc.get_scalar("eps")?,
            min_pts: doc.get_usize("min_pts")?,
            retained: doc.get_matrix("retained")?,
        };
        if m.retained.is_empty() || !(m.eps > 0.0) {
            return Err(Error::parse(0, "dbscan model: empty or invalid"));
        }
        Ok(m)
    }
}
