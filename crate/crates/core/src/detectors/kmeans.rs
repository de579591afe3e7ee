//! k-means++ clustering with silhouette-based model selection and the
//! radius-normalized novelty metric.

use rand::Rng;

use crate::persist::ModelDoc;
use crate::util::{dist, rng, row_width, sq_dist, Rng as SeededRng};
use crate::{Error, Result};

pub const MAX_LLOYD_ITERS: usize = 300;
/// Radius used when every cluster collapses to a single location.
pub const MIN_RADIUS: f64 = 1e-12;

/// Mean silhouette `(b − a) / max(a, b)` over all samples.
///
/// Samples alone in their cluster score 0, as do samples with `a = b = 0`.
pub fn silhouette(rows: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: rows.len(),
            got: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|s| **s > 0).count() < 2 {
        return Err(Error::invalid(
            "silhouette needs at least two nonempty clusters",
        ));
    }
    let n = rows.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(&rows[i], &rows[j]);
            }
        }
        let own = labels[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn nearest(centroids: &[Vec<f64>], v: &[f64]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, sq_dist(c, v)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

/// k-means++ seeding: first centre uniform, then proportional to squared distance.
pub(crate) fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if target < *d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = rows[pick].clone();
        for (d, r) in d2.iter_mut().zip(rows) {
            *d = d.min(sq_dist(r, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Result of Lloyd iterations for a fixed `k`.
#[derive(Debug, Clone)]
pub struct Clustering {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub iterations: usize,
}

pub fn lloyd(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<Clustering> {
    let d = row_width(rows)?;
    if k == 0 || k > rows.len() {
        return Err(Error::invalid(format!("k = {k} with {} rows", rows.len())));
    }
    let mut rng = rng(seed);
    let mut centroids = kmeans_pp(rows, k, &mut rng);
    let mut labels: Vec<usize> = rows.iter().map(|r| nearest(&centroids, r).0).collect();
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERS {
        iterations += 1;
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        // empty clusters take the point farthest from its centroid
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..rows.len())
                    .map(|i| (i, sq_dist(&rows[i], &centroids[labels[i]])))
                    .fold((0, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b })
                    .0;
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                centroids[c] = rows[far].clone();
            }
        }
        let next: Vec<usize> = rows.iter().map(|r| nearest(&centroids, r).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(Clustering {
        centroids,
        labels,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub k: usize,
    pub silhouette: f64,
}

impl KMeansModel {
    /// Fits every `k` in `k_range` and keeps the one with the best mean silhouette.
    pub fn fit(rows: &[Vec<f64>], k_range: (usize, usize), seed: u64) -> Result<Self> {
        row_width(rows)?;
        let (lo, hi) = k_range;
        if lo < 2 || lo > hi {
            return Err(Error::invalid(format!(
                "k range {lo}..={hi} must start at 2 or more"
            )));
        }
        if rows.len() < 3 {
            return Err(Error::InsufficientData(
                "k-means needs at least 3 rows".into(),
            ));
        }
        let hi = hi.min(rows.len() - 1);
        if lo > hi {
            return Err(Error::InsufficientData(format!(
                "{} rows cannot support k >= {lo}",
                rows.len()
            )));
        }
        let mut best: Option<(f64, Clustering, usize)> = None;
        for k in lo..=hi {
            let c = lloyd(rows, k, seed.wrapping_add(k as u64))?;
            let Ok(s) = silhouette(rows, &c.labels) else {
                continue;
            };
            if best.as_ref().is_none_or(|b| s > b.0) {
                best = Some((s, c, k));
            }
        }
        let (score, c, k) = best.ok_or_else(|| {
            Error::Degenerate("k-means could not form two distinct clusters".into())
        })?;
        let mut radii = vec![0.0f64; k];
        for (r, &l) in rows.iter().zip(&c.labels) {
            radii[l] = radii[l].max(dist(r, &c.centroids[l]));
        }
        let fallback = radii
            .iter()
            .copied()
            .filter(|r| *r > 0.0)
            .fold(f64::INFINITY, f64::min);
        let fallback = if fallback.is_finite() {
            fallback
        } else {
            MIN_RADIUS
        };
        radii
            .iter_mut()
            .filter(|r| **r <= 0.0)
            .for_each(|r| *r = fallback);
        Ok(Self {
            centroids: c.centroids,
            radii,
            k,
            silhouette: score,
        })
    }

    pub fn dim(&self) -> usize {
        self.centroids[0].len()
    }

    /// `(d(v, c) − r) / r` for the nearest centroid `c` with radius `r`.
    pub fn score(&self, v: &[f64]) -> f64 {
        let (i, d2) = nearest(&self.centroids, v);
        let r = self.radii[i];
        (d2.sqrt() - r) / r
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("kmeans");
        doc.scalar("k", self.k as f64)
            .scalar("silhouette", self.silhouette)
            .vector("radii", &self.radii)
            .matrix("centroids", &self.centroids);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("kmeans")?;
        let m = Self {
            k: doc.get_usize("k")?,
            silhouette: doc.get_scalar("silhouette")?,
            radii: doc.get_vector("radii")?,
            centroids: doc.get_matrix("centroids")?,
        };
        if m.centroids.len() != m.k || m.radii.len() != m.k || m.k == 0 {
            return Err(Error::parse(0, "kmeans model: inconsistent sizes"));
        }
        Ok(m)
    }
}
