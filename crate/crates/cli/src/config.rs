//! Run configuration read from a TOML file. Command-line flags override it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use novelbench::benchmark::{BenchConfig, EvalProtocol, Slice};
use novelbench::detectors::{DetectorConfig, DetectorKind};
use novelbench::features::WaveletSpec;
use novelbench::signal::{default_specs, DatasetSpec};
use novelbench::transform::TransformKind;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub features: FeatureSection,
    pub protocol: ProtocolSection,
    pub detectors: DetectorSection,
    pub transforms: TransformSection,
    pub tune: TuneSection,
    pub benchmark: BenchmarkSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Existing dataset file; defaults to `<out>/dataset.txt`.
    pub path: Option<PathBuf>,
    pub sets: Option<Vec<String>>,
    pub noise_sigma: Option<f64>,
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub wavelet_order: usize,
    pub levels: usize,
}

impl Default for FeatureSection {
    fn default() -> Self {
        let w = WaveletSpec::default();
        Self {
            wavelet_order: w.order,
            levels: w.levels,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub train_set: String,
    pub train_start: usize,
    pub train_end: usize,
    pub nominal_set: String,
    pub nominal_start: usize,
    pub nominal_end: Option<usize>,
    /// Empty string disables the novelty slice.
    pub novelty_set: String,
    pub trace: Vec<String>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            train_set: "set1".into(),
            train_start: 0,
            train_end: 100,
            nominal_set: "set1".into(),
            nominal_start: 100,
            nominal_end: None,
            novelty_set: "set5".into(),
            trace: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub select: Option<Vec<String>>,
    pub kmeans_k_min: Option<usize>,
    pub kmeans_k_max: Option<usize>,
    pub dbscan_eps: Option<f64>,
    pub dbscan_min_pts: Option<usize>,
    pub gmm_k_min: Option<usize>,
    pub gmm_k_max: Option<usize>,
    pub svm_nu: Option<f64>,
    pub svm_gamma: Option<f64>,
    pub iforest_trees: Option<usize>,
    pub iforest_subsample: Option<usize>,
    pub lof_k: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransformSection {
    pub select: Option<Vec<String>>,
    /// Directory of `best_<detector>_<transform>.toml` files; defaults to
    /// `<out>/tune` when it exists.
    pub tuned_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSection {
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub timing_evals: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn wavelet(&self) -> anyhow::Result<WaveletSpec> {
        Ok(WaveletSpec::new(
            self.features.wavelet_order,
            self.features.levels,
        )?)
    }

    pub fn protocol(&self) -> EvalProtocol {
        let p = &self.protocol;
        EvalProtocol {
            train: Slice::new(&p.train_set, p.train_start, Some(p.train_end)),
            nominal: Slice::new(&p.nominal_set, p.nominal_start, p.nominal_end),
            novelty: (!p.novelty_set.is_empty()).then(|| Slice::new(&p.novelty_set, 0, None)),
            trace: p.trace.clone(),
        }
    }

    /// Default shaker sets, optionally filtered and with noise or duration overrides.
    pub fn dataset_specs(&self) -> anyhow::Result<Vec<DatasetSpec>> {
        let mut specs = default_specs();
        if let Some(sel) = &self.dataset.sets {
            let wanted: Vec<String> = sel.iter().map(|s| normalize_set_name(s)).collect();
            for w in &wanted {
                if !specs.iter().any(|s| &s.set_name == w) {
                    bail!("unknown set '{w}'; the default sets are set1..set8");
                }
            }
            specs.retain(|s| wanted.contains(&s.set_name));
        }
        for s in &mut specs {
            if let Some(sigma) = self.dataset.noise_sigma {
                *s = s.clone().with_noise(sigma);
            }
            if let Some(d) = self.dataset.duration {
                *s = s.clone().with_duration(d);
            }
        }
        Ok(specs)
    }

    pub fn detector_kinds(&self) -> anyhow::Result<Vec<DetectorKind>> {
        match &self.detectors.select {
            None => Ok(DetectorKind::ALL.to_vec()),
            Some(v) => v.iter().map(|s| Ok(s.parse()?)).collect(),
        }
    }

    pub fn transform_kinds(&self) -> anyhow::Result<Vec<TransformKind>> {
        match &self.transforms.select {
            None => Ok(TransformKind::ALL.to_vec()),
            Some(v) => v.iter().map(|s| Ok(s.parse()?)).collect(),
        }
    }

    pub fn detector_config(&self) -> DetectorConfig {
        let d = &self.detectors;
        let mut c = DetectorConfig::default();
        c.kmeans_k = (
            d.kmeans_k_min.unwrap_or(c.kmeans_k.0),
            d.kmeans_k_max.unwrap_or(c.kmeans_k.1),
        );
        c.dbscan_eps = d.dbscan_eps.or(c.dbscan_eps);
        c.dbscan_min_pts = d.dbscan_min_pts.unwrap_or(c.dbscan_min_pts);
        c.gmm_k = (
            d.gmm_k_min.unwrap_or(c.gmm_k.0),
            d.gmm_k_max.unwrap_or(c.gmm_k.1),
        );
        c.svm_nu = d.svm_nu.unwrap_or(c.svm_nu);
        c.svm_gamma = d.svm_gamma.or(c.svm_gamma);
        c.iforest_trees = d.iforest_trees.unwrap_or(c.iforest_trees);
        c.iforest_subsample = d.iforest_subsample.unwrap_or(c.iforest_subsample);
        c.lof_k = d.lof_k.unwrap_or(c.lof_k);
        c
    }

    pub fn bench_config(&self, seed: u64) -> anyhow::Result<BenchConfig> {
        Ok(BenchConfig {
            detectors: self.detector_kinds()?,
            transforms: self.transform_kinds()?,
            detector: self.detector_config(),
            seed,
            timing_evals: self.benchmark.timing_evals.unwrap_or(1000),
            ..BenchConfig::default()
        })
    }
}

/// Accepts `3` as shorthand for `set3`.
pub fn normalize_set_name(s: &str) -> String {
    let s = s.trim();
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_digit()) {
        format!("set{s}")
    } else {
        s.to_string()
    }
}
