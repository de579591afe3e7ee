//! Latent-space transforms applied to normalized features before detection.

pub mod autoencoder;
pub mod pca;

use std::fmt;
use std::str::FromStr;

use crate::persist::ModelDoc;
use crate::util::{check_dim, row_width};
use crate::{Error, Result};

pub use autoencoder::{fit_autoencoder, AeArch, AeModel, AeVariant, TrainConfig};
pub use pca::{PcaModel, PcaTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransformKind {
    /// Original features, untransformed.
    Of,
    Aer,
    Aea,
    Pca,
}

impl TransformKind {
    pub const ALL: [TransformKind; 4] = [Self::Of, Self::Aer, Self::Aea, Self::Pca];

    pub fn id(self) -> &'static str {
        match self {
            Self::Of => "OF",
            Self::Aer => "AER",
            Self::Aea => "AEA",
            Self::Pca => "PCA",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl serde::Serialize for TransformKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "of" | "identity" | "none" => Ok(Self::Of),
            "aer" => Ok(Self::Aer),
            "aea" => Ok(Self::Aea),
            "pca" => Ok(Self::Pca),
            other => Err(Error::invalid(format!("unknown transform '{other}'"))),
        }
    }
}

/// Autoencoder hyperparameters; the decoder mirrors the encoder (`D1 = E1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeParams {
    pub n_e1: usize,
    pub n_e2: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl AeParams {
    pub fn new(n_e1: usize, n_e2: usize, lr: f64, batch_size: usize) -> Self {
        Self {
            n_e1,
            n_e2,
            lr,
            batch_size,
            epochs: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformSpec {
    Identity,
    Pca(PcaTarget),
    Autoencoder {
        variant: AeVariant,
        params: AeParams,
    },
}

impl TransformSpec {
    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Identity => TransformKind::Of,
            Self::Pca(_) => TransformKind::Pca,
            Self::Autoencoder {
                variant: AeVariant::Undercomplete,
                ..
            } => TransformKind::Aer,
            Self::Autoencoder { .. } => TransformKind::Aea,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TransformModel {
    Identity { dim: usize },
    Pca(PcaModel),
    Autoencoder(AeModel),
}

impl TransformModel {
    pub fn fit(spec: &TransformSpec, rows: &[Vec<f64>], seed: u64) -> Result<Self> {
        let dim = row_width(rows)?;
        Ok(match *spec {
            TransformSpec::Identity => Self::Identity { dim },
            TransformSpec::Pca(target) => Self::Pca(PcaModel::fit(rows, target)?),
            TransformSpec::Autoencoder { variant, params } => {
                let arch = AeArch::symmetric(params.n_e1, params.n_e2);
                let cfg = TrainConfig {
                    lr: params.lr,
                    batch_size: params.batch_size,
                    epochs: params.epochs,
                    seed,
                };
                Self::Autoencoder(fit_autoencoder(rows, variant, arch, cfg)?)
            }
        })
    }

    pub fn kind(&self) -> TransformKind {
        match self {
            Self::Identity { .. } => TransformKind::Of,
            Self::Pca(_) => TransformKind::Pca,
            Self::Autoencoder(m) => match m.variant {
                AeVariant::Undercomplete => TransformKind::Aer,
                AeVariant::Overcomplete => TransformKind::Aea,
            },
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Self::Identity { dim } => *dim,
            Self::Pca(m) => m.input_dim(),
            Self::Autoencoder(m) => m.input_dim(),
        }
    }

    /// Latent width `n_f`.
    pub fn output_dim(&self) -> usize {
        match self {
            Self::Identity { dim } => *dim,
            Self::Pca(m) => m.n_components(),
            Self::Autoencoder(m) => m.latent_dim(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Identity { dim } => {
                check_dim(*dim, v.len())?;
                Ok(v.to_vec())
            }
            Self::Pca(m) => m.transform(v),
            Self::Autoencoder(m) => m.encode(v),
        }
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }

    pub fn to_doc(&self) -> ModelDoc {
        match self {
            Self::Identity { dim } => {
                let mut doc = ModelDoc::new("identity");
                doc.scalar("dim", *dim as f64);
                doc
            }
            Self::Pca(m) => m.to_doc(),
            Self::Autoencoder(m) => m.to_doc(),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        match doc.kind.as_str() {
            "identity" => Ok(Self::Identity {
                dim: doc.get_usize("dim")?,
            }),
            "pca" => Ok(Self::Pca(PcaModel::from_doc(doc)?)),
            "autoencoder" => Ok(Self::Autoencoder(AeModel::from_doc(doc)?)),
            other => Err(Error::parse(0, format!("unknown transform kind '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<Vec<f64>> {
        (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t.sin(), t.cos(), 0.1 * t, (0.3 * t).sin(), 1.0 - 0.05 * t]
            })
            .collect()
    }

    #[test]
    fn identity_is_exact() {
        let m = TransformModel::fit(&TransformSpec::Identity, &rows(), 0).unwrap();
        let v = vec![1.5, -2.0, 1e-300, 0.0, 7.0];
        assert_eq!(m.apply(&v).unwrap(), v);
        assert_eq!(m.output_dim(), 5);
    }

    #[test]
    fn dispatch_widths() {
        let pca =
            TransformModel::fit(&TransformSpec::Pca(PcaTarget::Count(2)), &rows(), 0).unwrap();
        assert_eq!(pca.apply(&rows()[0]).unwrap().len(), 2);
        let spec = TransformSpec::Autoencoder {
            variant: AeVariant::Overcomplete,
            params: AeParams {
                epochs: 3,
                ..AeParams::new(6, 8, 0.01, 4)
            },
        };
        let ae = TransformModel::fit(&spec, &rows(), 1).unwrap();
        assert_eq!(ae.kind(), TransformKind::Aea);
        assert_eq!(ae.apply(&rows()[3]).unwrap().len(), 8);
        assert!(ae.apply(&[1.0]).is_err());
    }

    #[test]
    fn kinds_parse() {
        for k in TransformKind::ALL {
            assert_eq!(k.id().parse::<TransformKind>().unwrap(), k);
        }
        assert!("xyz".parse::<TransformKind>().is_err());
    }

    #[test]
    fn doc_round_trip() {
        for spec in [
            TransformSpec::Identity,
            TransformSpec::Pca(PcaTarget::Ratio(0.9)),
        ] {
            let m = TransformModel::fit(&spec, &rows(), 0).unwrap();
            assert_eq!(TransformModel::from_doc(&m.to_doc()).unwrap(), m);
        }
    }
}
