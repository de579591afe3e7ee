use serde::{Deserialize, Serialize};

use crate::persist::ModelDoc;
use crate::util::{check_dim, row_width};
use crate::{Error, Result};

/// Per-feature z-score fitted on the training matrix.
///
/// Features with zero training spread map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "normalizer needs at least 2 rows, got {}",
                rows.len()
            )));
        }
        let d = row_width(rows)?;
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| if *s > 0.0 { (x - m) / s } else { 0.0 })
            .collect())
    }

    pub fn normalize_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.normalize(r)).collect()
    }

    /// Inverse of [`normalize`](Self::normalize); zero-spread features return the mean.
    pub fn denormalize(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(v.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((z, m), s)| z * s + m)
            .collect())
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("normalizer");
        doc.vector("mean", &self.mean).vector("std", &self.std);
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("normalizer")?;
        let n = Self {
            mean: doc.get_vector("mean")?,
            std: doc.get_vector("std")?,
        };
        if n.mean.is_empty() || n.mean.len() != n.std.len() {
            return Err(Error::parse(0, "normalizer: mean and std lengths differ"));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows() {
        let n = Normalizer::fit(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(n.mean, vec![1.0]);
        assert_eq!(n.std, vec![1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let n = Normalizer::fit(&[vec![5.0, 1.0], vec![5.0, 3.0]]).unwrap();
        assert_eq!(n.std[0], 0.0);
        assert_eq!(n.normalize(&[123.0, 2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn mean_vector_maps_to_zero_and_round_trips() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, -4.0], vec![0.5, 9.0]];
        let n = Normalizer::fit(&rows).unwrap();
        assert!(n
            .normalize(&n.mean)
            .unwrap()
            .iter()
            .all(|v| v.abs() < 1e-15));
        let v = [0.3, 7.0];
        let back = n.denormalize(&n.normalize(&v).unwrap()).unwrap();
        assert!((back[0] - v[0]).abs() < 1e-12 && (back[1] - v[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Normalizer::fit(&[vec![1.0]]).is_err());
        let n = Normalizer::fit(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(
            n.normalize(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 1,
                got: 2
            })
        ));
    }
}
