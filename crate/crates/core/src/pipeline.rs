//! A fitted normalizer → transform → detector chain, its default
//! hyperparameters per detector and its on-disk form.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::detectors::{Detector, DetectorConfig, DetectorKind, NmScaler};
use crate::features::Normalizer;
use crate::persist::{read_docs, write_docs, ModelDoc};
use crate::transform::{
    AeParams, AeVariant, PcaTarget, TransformKind, TransformModel, TransformSpec,
};
use crate::util::derive_seed;
use crate::{Error, Result};

/// Tuned autoencoder widths, learning rate and batch size, and PCA component
/// count for each detector, as reported for the reference study.
pub fn default_transform_spec(detector: DetectorKind, transform: TransformKind) -> TransformSpec {
    use DetectorKind::*;
    match transform {
        TransformKind::Of => TransformSpec::Identity,
        TransformKind::Pca => TransformSpec::Pca(PcaTarget::Count(match detector {
            KMeans | Lof => 3,
            Dbscan | Gmm | NuSvm => 2,
            IForest => 70,
        })),
        TransformKind::Aea => {
            let p = match detector {
                KMeans => AeParams::new(80, 85, 0.08, 64),
                Dbscan => AeParams::new(75, 85, 0.20, 32),
                Gmm => AeParams::new(79, 85, 0.08, 32),
                NuSvm => AeParams::new(80, 93, 0.09, 32),
                IForest => AeParams::new(79, 85, 0.02, 64),
                Lof => AeParams::new(79, 88, 0.03, 32),
            };
            TransformSpec::Autoencoder {
                variant: AeVariant::Overcomplete,
                params: p,
            }
        }
        TransformKind::Aer => {
            let p = match detector {
                KMeans => AeParams::new(61, 32, 0.03, 64),
                Dbscan => AeParams::new(56, 10, 0.08, 64),
                Gmm => AeParams::new(61, 10, 0.01, 64),
                NuSvm => AeParams::new(65, 10, 0.10, 64),
                IForest => AeParams::new(50, 45, 0.03, 64),
                Lof => AeParams::new(50, 10, 0.01, 32),
            };
            TransformSpec::Autoencoder {
                variant: AeVariant::Undercomplete,
                params: p,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub normalizer: Normalizer,
    pub transform: TransformModel,
    pub detector: Detector,
    pub scaler: Option<NmScaler>,
}

impl Pipeline {
    /// Fits every stage on raw training features. Transform and detector draw
    /// independent seeds derived from `seed`.
    pub fn fit(
        train: &[Vec<f64>],
        detector: DetectorKind,
        spec: &TransformSpec,
        cfg: &DetectorConfig,
        seed: u64,
    ) -> Result<Self> {
        let label = format!("{}/{}", detector.id(), spec.kind().id());
        let normalizer = Normalizer::fit(train)?;
        let z = normalizer.normalize_all(train)?;
        let transform =
            TransformModel::fit(spec, &z, derive_seed(seed, &format!("transform/{label}")))?;
        let latent = transform.apply_all(&z)?;
        let detector = Detector::fit(
            detector,
            &latent,
            cfg,
            derive_seed(seed, &format!("detector/{label}")),
        )?;
        Ok(Self {
            normalizer,
            transform,
            detector,
            scaler: None,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.normalizer.dim()
    }

    /// Normalized and transformed features, ready for the detector.
    pub fn latent(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.transform.apply(&self.normalizer.normalize(features)?)
    }

    pub fn latent_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.latent(r)).collect()
    }

    pub fn novelty(&self, features: &[f64]) -> Result<f64> {
        self.detector.novelty(&self.latent(features)?)
    }

    pub fn novelty_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.novelty(r)).collect()
    }

    /// Raw NM and, when a scaler is attached, its scaled value.
    pub fn score(&self, features: &[f64]) -> Result<(f64, Option<f64>)> {
        let nm = self.novelty(features)?;
        Ok((nm, self.scaler.map(|s| s.scale(nm))))
    }

    pub fn to_docs(&self) -> Vec<ModelDoc> {
        let mut docs = vec![
            self.normalizer.to_doc(),
            self.transform.to_doc(),
            self.detector.to_doc(),
        ];
        if let Some(s) = &self.scaler {
            docs.push(s.to_doc());
        }
        docs
    }

    pub fn from_docs(docs: &[ModelDoc]) -> Result<Self> {
        if !(3..=4).contains(&docs.len()) {
            return Err(Error::parse(
                0,
                format!("pipeline file holds {} models; expected 3 or 4", docs.len()),
            ));
        }
        let p = Self {
            normalizer: Normalizer::from_doc(&docs[0])?,
            transform: TransformModel::from_doc(&docs[1])?,
            detector: Detector::from_doc(&docs[2])?,
            scaler: docs.get(3).map(NmScaler::from_doc).transpose()?,
        };
        if p.transform.input_dim() != p.normalizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.normalizer.dim(),
                got: p.transform.input_dim(),
            });
        }
        if p.detector.dim() != p.transform.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: p.transform.output_dim(),
                got: p.detector.dim(),
            });
        }
        Ok(p)
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        write_docs(&self.to_docs(), w)
    }

    pub fn read<R: Read>(r: R) -> Result<Self> {
        Self::from_docs(&read_docs(r)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_widths() {
        let n = |d, t| match default_transform_spec(d, t) {
            TransformSpec::Autoencoder { params, .. } => params.n_e2,
            TransformSpec::Pca(PcaTarget::Count(n)) => n,
            _ => 0,
        };
        assert_eq!(n(DetectorKind::NuSvm, TransformKind::Aea), 93);
        assert_eq!(n(DetectorKind::Dbscan, TransformKind::Pca), 2);
        assert_eq!(n(DetectorKind::KMeans, TransformKind::Aer), 32);
    }

    #[test]
    fn round_trip_through_text() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![t.sin(), (0.3 * t).cos(), t % 5.0, 1.0]
            })
            .collect();
        for d in DetectorKind::ALL {
            let spec = TransformSpec::Pca(PcaTarget::Count(2));
            let cfg = DetectorConfig {
                lof_k: 5,
                ..DetectorConfig::default()
            };
            let mut p = Pipeline::fit(&rows, d, &spec, &cfg, 3).unwrap();
            p.scaler = Some(NmScaler {
                min: -1.0,
                max: 2.0,
            });
            let mut buf = Vec::new();
            p.write(&mut buf).unwrap();
            let q = Pipeline::read(buf.as_slice()).unwrap();
            for r in &rows {
                assert_eq!(p.score(r).unwrap(), q.score(r).unwrap(), "{d}");
            }
        }
    }
}
