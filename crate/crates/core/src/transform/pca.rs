//! Principal component analysis on the normalized training features.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::persist::ModelDoc;
use crate::util::{check_dim, row_width};
use crate::{Error, Result};

/// How many principal directions to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PcaTarget {
    Count(usize),
    /// Smallest count whose cumulative explained-variance ratio reaches this value.
    Ratio(f64),
}

/// Cumulative ratios within this slack of the target count as reaching it.
const RATIO_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// `n_f × d`, orthonormal rows sorted by decreasing variance.
    pub components: Vec<Vec<f64>>,
    pub explained_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

impl PcaModel {
    pub fn fit(rows: &[Vec<f64>], target: PcaTarget) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "PCA needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let d = row_width(rows)?;
        match target {
            PcaTarget::Count(k) if k == 0 || k > d => {
                return Err(Error::invalid(format!(
                    "component count {k} outside 1..={d}"
                )))
            }
            PcaTarget::Ratio(r) if !(r > 0.0 && r <= 1.0) => {
                return Err(Error::invalid(format!("variance ratio {r} outside (0, 1]")))
            }
            _ => {}
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n;
            }
        }
        let centered = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j] - mean[j]);
        let cov = (centered.transpose() * &centered) / n;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Degenerate(
                "all training rows are identical; no principal directions".into(),
            ));
        }
        let ratios: Vec<f64> = values.iter().map(|v| v / total).collect();
        let keep = match target {
            PcaTarget::Count(k) => k,
            PcaTarget::Ratio(r) => {
                let mut cum = 0.0;
                ratios
                    .iter()
                    .position(|q| {
                        cum += q;
                        cum >= r - RATIO_SLACK
                    })
                    .map_or(d, |p| p + 1)
            }
        };
        let components = order[..keep]
            .iter()
            .map(|&i| {
                let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
                // sign convention: largest-magnitude entry positive
                let pivot = v
                    .iter()
                    .enumerate()
                    .fold((0, 0.0f64), |best, (j, x)| {
                        if x.abs() > best.1.abs() {
                            (j, *x)
                        } else {
                            best
                        }
                    })
                    .0;
                if v[pivot] < 0.0 {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        Ok(Self {
            components,
            explained_ratio: ratios[..keep].to_vec(),
            mean,
        })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), v.len())?;
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(v)
                    .zip(&self.mean)
                    .map(|((w, x), m)| w * (x - m))
                    .sum()
            })
            .collect())
    }

    /// Maps a latent vector back to feature space.
    pub fn inverse(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_components(), h.len())?;
        let mut out = self.mean.clone();
        for (c, z) in self.components.iter().zip(h) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += z * w;
            }
        }
        Ok(out)
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("pca");
        doc.vector("mean", &self.mean)
            .vector("explained_ratio", &self.explained_ratio)
            .matrix("components", &self.components);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("pca")?;
        let m = Self {
            mean: doc.get_vector("mean")?,
            explained_ratio: doc.get_vector("explained_ratio")?,
            components: doc.get_matrix("components")?,
        };
        if m.components.iter().any(|c| c.len() != m.mean.len())
            || m.components.len() != m.explained_ratio.len()
        {
            return Err(Error::parse(0, "pca model: inconsistent dimensions"));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                (0..d)
                    .map(|j| rng.random_range(-1.0..1.0) * (j + 1) as f64 + i as f64 * 0.01)
                    .collect()
            })
            .collect()
    }

    #[test]
    fn points_on_a_line_have_one_direction() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, 2.0 * i as f64 + 1.0])
            .collect();
        let m = PcaModel::fit(&rows, PcaTarget::Ratio(1.0)).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!((m.explained_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_ratio_keeps_rank() {
        // 5 points in 8 dims: centered rank 4
        let rows = random_rows(5, 8, 3);
        let m = PcaModel::fit(&rows, PcaTarget::Ratio(1.0)).unwrap();
        assert_eq!(m.n_components(), 4);
    }

    #[test]
    fn identical_rows_are_degenerate() {
        let rows = vec![vec![1.0, 2.0]; 5];
        assert!(matches!(
            PcaModel::fit(&rows, PcaTarget::Count(1)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn orthonormal_sorted_and_complete() {
        let rows = random_rows(40, 6, 9);
        let m = PcaModel::fit(&rows, PcaTarget::Count(6)).unwrap();
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
        assert!(m.explained_ratio.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.explained_ratio.iter().sum::<f64>() <= 1.0 + 1e-12);
        let v = &rows[7];
        let back = m.inverse(&m.transform(v).unwrap()).unwrap();
        assert!(back.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-8));
        assert!(m
            .transform(&m.mean)
            .unwrap()
            .iter()
            .all(|z| z.abs() < 1e-12));
    }

    #[test]
    fn projection_shrinks_norm() {
        let rows = random_rows(30, 5, 1);
        let m = PcaModel::fit(&rows, PcaTarget::Count(2)).unwrap();
        for v in &rows {
            let h = m.transform(v).unwrap();
            let hn: f64 = h.iter().map(|x| x * x).sum();
            let cn: f64 = v.iter().zip(&m.mean).map(|(x, mu)| (x - mu).powi(2)).sum();
            assert!(hn <= cn + 1e-12);
        }
    }

    #[test]
    fn bad_targets_rejected() {
        let rows = random_rows(10, 3, 2);
        assert!(PcaModel::fit(&rows, PcaTarget::Count(0)).is_err());
        assert!(PcaModel::fit(&rows, PcaTarget::Count(4)).is_err());
        assert!(PcaModel::fit(&rows, PcaTarget::Ratio(0.0)).is_err());
        assert!(PcaModel::fit(&rows, PcaTarget::Ratio(1.5)).is_err());
    }
}
