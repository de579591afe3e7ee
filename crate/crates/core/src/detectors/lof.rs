//! Local outlier factor in novelty mode: queries are compared against the
//! training points only.

use crate::persist::ModelDoc;
use crate::util::{dist, row_width};
use crate::{Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 20;
/// Floor on the mean reachability distance so duplicates keep a finite density.
pub const MIN_REACH: f64 = 1e-12;

/// The `k` nearest points of `rows` to `v`, ties broken by index, optionally
/// skipping one index.
fn knn(rows: &[Vec<f64>], v: &[f64], k: usize, skip: Option<usize>) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, r)| (i, dist(r, v)))
        .collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    d.truncate(k);
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct LofModel {
    pub points: Vec<Vec<f64>>,
    pub k: usize,
    /// Distance from each training point to its k-th nearest other point.
    pub k_distance: Vec<f64>,
    pub lrd: Vec<f64>,
}

impl LofModel {
    pub fn fit(rows: &[Vec<f64>], k: usize) -> Result<Self> {
        row_width(rows)?;
        if k == 0 || k >= rows.len() {
            return Err(Error::InsufficientData(format!(
                "LOF with k = {k} needs more than k training rows, got {}",
                rows.len()
            )));
        }
        let neighbors: Vec<Vec<(usize, f64)>> = (0..rows.len())
            .map(|i| knn(rows, &rows[i], k, Some(i)))
            .collect();
        let k_distance: Vec<f64> = neighbors.iter().map(|n| n[k - 1].1).collect();
        let lrd = neighbors
            .iter()
            .map(|n| local_density(n, &k_distance))
            .collect();
        Ok(Self {
            points: rows.to_vec(),
            k,
            k_distance,
            lrd,
        })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Mean ratio of neighbour density to the density at `v`.
    pub fn score(&self, v: &[f64]) -> f64 {
        let n = knn(&self.points, v, self.k, None);
        let own = local_density(&n, &self.k_distance);
        n.iter().map(|(j, _)| self.lrd[*j]).sum::<f64>() / (self.k as f64 * own)
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("lof");
        doc.scalar("k", self.k as f64)
            .vector("k_distance", &self.k_distance)
            .vector("lrd", &self.lrd)
            .matrix("points", &self.points);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("lof")?;
        let m = Self {
            k: doc.get_usize("k")?,
            k_distance: doc.get_vector("k_distance")?,
            lrd: doc.get_vector("lrd")?,
            points: doc.get_matrix("points")?,
        };
        let n = m.points.len();
        if m.k == 0 || m.k >= n || m.k_distance.len() != n || m.lrd.len() != n {
            return Err(Error::parse(0, "lof model: inconsistent sizes"));
        }
        Ok(m)
    }
}

fn local_density(neighbors: &[(usize, f64)], k_distance: &[f64]) -> f64 {
    let reach = neighbors
        .iter()
        .map(|&(j, d)| d.max(k_distance[j]))
        .sum::<f64>()
        / neighbors.len() as f64;
    1.0 / reach.max(MIN_REACH)
}
