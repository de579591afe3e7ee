//! The six unsupervised detectors and their continuous novelty metric (NM).
//! Higher NM means more novel for every detector.

pub mod dbscan;
pub mod gmm;
pub mod iforest;
pub mod kmeans;
pub mod lof;
pub mod ocsvm;
pub mod scaler;

use std::fmt;
use std::str::FromStr;

use crate::persist::ModelDoc;
use crate::util::check_dim;
use crate::{Error, Result};

pub use dbscan::DbscanModel;
pub use gmm::GmmModel;
pub use iforest::IForestModel;
pub use kmeans::{silhouette, KMeansModel};
pub use lof::LofModel;
pub use ocsvm::OcsvmModel;
pub use scaler::NmScaler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    KMeans,
    Dbscan,
    Gmm,
    NuSvm,
    IForest,
    Lof,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        Self::KMeans,
        Self::Dbscan,
        Self::Gmm,
        Self::NuSvm,
        Self::IForest,
        Self::Lof,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Self::KMeans => "KMeans",
            Self::Dbscan => "DBSCAN",
            Self::Gmm => "GMM",
            Self::NuSvm => "nuSVM",
            Self::IForest => "IForest",
            Self::Lof => "LOF",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl serde::Serialize for DetectorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kmeans" | "k-means" => Ok(Self::KMeans),
            "dbscan" => Ok(Self::Dbscan),
            "gmm" => Ok(Self::Gmm),
            "nusvm" | "svm" | "ocsvm" => Ok(Self::NuSvm),
            "iforest" | "if" => Ok(Self::IForest),
            "lof" => Ok(Self::Lof),
            other => Err(Error::invalid(format!("unknown detector '{other}'"))),
        }
    }
}

/// Detector hyperparameters; `None` selects the data-driven default.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub kmeans_k: (usize, usize),
    pub dbscan_eps: Option<f64>,
    pub dbscan_min_pts: usize,
    pub gmm_k: (usize, usize),
    pub svm_nu: f64,
    pub svm_gamma: Option<f64>,
    pub iforest_trees: usize,
    pub iforest_subsample: usize,
    pub lof_k: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            kmeans_k: (2, 10),
            dbscan_eps: None,
            dbscan_min_pts: dbscan::DEFAULT_MIN_PTS,
            gmm_k: (1, 5),
            svm_nu: ocsvm::DEFAULT_NU,
            svm_gamma: None,
            iforest_trees: iforest::DEFAULT_TREES,
            iforest_subsample: iforest::DEFAULT_SUBSAMPLE,
            lof_k: lof::DEFAULT_NEIGHBORS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    KMeans(KMeansModel),
    Dbscan(DbscanModel),
    Gmm(GmmModel),
    NuSvm(OcsvmModel),
    IForest(IForestModel),
    Lof(LofModel),
}

impl Detector {
    pub fn fit(
        kind: DetectorKind,
        rows: &[Vec<f64>],
        cfg: &DetectorConfig,
        seed: u64,
    ) -> Result<Self> {
        Ok(match kind {
            DetectorKind::KMeans => Self::KMeans(KMeansModel::fit(rows, cfg.kmeans_k, seed)?),
            DetectorKind::Dbscan => {
                Self::Dbscan(DbscanModel::fit(rows, cfg.dbscan_eps, cfg.dbscan_min_pts)?)
            }
            DetectorKind::Gmm => Self::Gmm(GmmModel::fit(rows, cfg.gmm_k, seed)?),
            DetectorKind::NuSvm => Self::NuSvm(OcsvmModel::fit(rows, cfg.svm_nu, cfg.svm_gamma)?),
            DetectorKind::IForest => Self::IForest(IForestModel::fit(
                rows,
                cfg.iforest_trees,
                cfg.iforest_subsample,
                seed,
            )?),
            DetectorKind::Lof => Self::Lof(LofModel::fit(rows, cfg.lof_k)?),
        })
    }

    pub fn kind(&self) -> DetectorKind {
        match self {
            Self::KMeans(_) => DetectorKind::KMeans,
            Self::Dbscan(_) => DetectorKind::Dbscan,
            Self::Gmm(_) => DetectorKind::Gmm,
            Self::NuSvm(_) => DetectorKind::NuSvm,
            Self::IForest(_) => DetectorKind::IForest,
            Self::Lof(_) => DetectorKind::Lof,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::KMeans(m) => m.dim(),
            Self::Dbscan(m) => m.dim(),
            Self::Gmm(m) => m.dim(),
            Self::NuSvm(m) => m.dim(),
            Self::IForest(m) => m.dim(),
            Self::Lof(m) => m.dim(),
        }
    }

    pub fn novelty(&self, v: &[f64]) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(self.novelty_unchecked(v))
    }

    /// Scores without the dimension check; used by the timing loop.
    pub fn novelty_unchecked(&self, v: &[f64]) -> f64 {
        match self {
            Self::KMeans(m) => m.score(v),
            Self::Dbscan(m) => m.score(v),
            Self::Gmm(m) => m.score(v),
            Self::NuSvm(m) => m.score(v),
            Self::IForest(m) => m.score(v),
            Self::Lof(m) => m.score(v),
        }
    }

    pub fn novelty_all(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.novelty(r)).collect()
    }

    pub fn to_doc(&self) -> ModelDoc {
        match self {
            Self::KMeans(m) => m.to_doc(),
            Self::Dbscan(m) => m.to_doc(),
            Self::Gmm(m) => m.to_doc(),
            Self::NuSvm(m) => m.to_doc(),
            Self::IForest(m) => m.to_doc(),
            Self::Lof(m) => m.to_doc(),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        Ok(match doc.kind.as_str() {
            "kmeans" => Self::KMeans(KMeansModel::from_doc(doc)?),
            "dbscan" => Self::Dbscan(DbscanModel::from_doc(doc)?),
            "gmm" => Self::Gmm(GmmModel::from_doc(doc)?),
            "ocsvm" => Self::NuSvm(OcsvmModel::from_doc(doc)?),
            "iforest" => Self::IForest(IForestModel::from_doc(doc)?),
            "lof" => Self::Lof(LofModel::from_doc(doc)?),
            other => return Err(Error::parse(0, format!("unknown detector kind '{other}'"))),
        })
    }
}
