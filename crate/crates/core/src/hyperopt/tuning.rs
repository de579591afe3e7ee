//! Tuning transform hyperparameters for a given detector by minimizing the
//! variance of its novelty metric on nominal data.

use std::fmt::Write as _;

use super::{optimize_from, Domain, Param, SearchSpace, Study};
use crate::benchmark::{nm_variance, EvalProtocol, SetFeatures};
use crate::detectors::{DetectorConfig, DetectorKind};
use crate::pipeline::Pipeline;
use crate::transform::{AeParams, AeVariant, PcaTarget, TransformKind, TransformSpec};
use crate::{Error, Result};

/// Default ranges: AER `E1 ∈ [50, 65]`, `E2 ∈ [10, 45]`; AEA `E1 ∈ [75, 80]`,
/// `E2 ∈ [85, 100]`; log-uniform `lr ∈ [0.01, 0.1]`; `bs ∈ {32, 64}`;
/// PCA `n_f ∈ [2, 70]`.
pub fn transform_space(kind: TransformKind) -> Result<SearchSpace> {
    let ae = |e1: (i64, i64), e2: (i64, i64)| {
        SearchSpace::new(vec![
            Param::new("n_e1", Domain::Int { lo: e1.0, hi: e1.1 }),
            Param::new("n_e2", Domain::Int { lo: e2.0, hi: e2.1 }),
            Param::new("lr", Domain::LogUniform { lo: 0.01, hi: 0.1 }),
            Param::new("batch_size", Domain::Categorical(vec![32.0, 64.0])),
        ])
    };
    match kind {
        TransformKind::Aer => ae((50, 65), (10, 45)),
        TransformKind::Aea => ae((75, 80), (85, 100)),
        TransformKind::Pca => {
            SearchSpace::new(vec![Param::new("n_f", Domain::Int { lo: 2, hi: 70 })])
        }
        TransformKind::Of => Err(Error::invalid(
            "the identity transform has no hyperparameters",
        )),
    }
}

/// Builds a transform spec from an assignment of [`transform_space`].
pub fn spec_from_params(kind: TransformKind, p: &[f64]) -> Result<TransformSpec> {
    let need = match kind {
        TransformKind::Aer | TransformKind::Aea => 4,
        TransformKind::Pca => 1,
        TransformKind::Of => 0,
    };
    if p.len() != need {
        return Err(Error::DimensionMismatch {
            expected: need,
            got: p.len(),
        });
    }
    Ok(match kind {
        TransformKind::Of => TransformSpec::Identity,
        TransformKind::Pca => TransformSpec::Pca(PcaTarget::Count(p[0] as usize)),
        TransformKind::Aer | TransformKind::Aea => TransformSpec::Autoencoder {
            variant: if kind == TransformKind::Aer {
                AeVariant::Undercomplete
            } else {
                AeVariant::Overcomplete
            },
            params: AeParams::new(p[0] as usize, p[1] as usize, p[2], p[3] as usize),
        },
    })
}

/// Raw NM variance over the nominal slice for a pipeline fitted on the
/// training slice.
pub fn objective(
    sets: &[SetFeatures],
    protocol: &EvalProtocol,
    detector: DetectorKind,
    spec: &TransformSpec,
    cfg: &DetectorConfig,
    seed: u64,
) -> Result<f64> {
    let p = Pipeline::fit(protocol.train_rows(sets)?, detector, spec, cfg, seed)?;
    nm_variance(&p.novelty_all(protocol.nominal_rows(sets)?)?)
}

#[allow(clippy::too_many_arguments)]
pub fn tune(
    sets: &[SetFeatures],
    protocol: &EvalProtocol,
    detector: DetectorKind,
    transform: TransformKind,
    cfg: &DetectorConfig,
    n_trials: usize,
    seed: u64,
    history: Option<Study>,
) -> Result<Study> {
    protocol.validate(sets)?;
    let space = transform_space(transform)?;
    let study = history.unwrap_or_else(|| Study::new(&space));
    optimize_from(&space, study, n_trials, seed, |p| {
        objective(
            sets,
            protocol,
            detector,
            &spec_from_params(transform, p)?,
            cfg,
            seed,
        )
    })
}

/// Winning transform settings for one combination, stored as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct BestParams {
    pub detector: DetectorKind,
    pub transform: TransformKind,
    pub spec: TransformSpec,
    pub j: f64,
}

impl BestParams {
    pub fn from_study(
        detector: DetectorKind,
        transform: TransformKind,
        study: &Study,
    ) -> Result<Self> {
        let best = study
            .best()
            .ok_or_else(|| Error::Failed("study has no successful trial".into()))?;
        Ok(Self {
            detector,
            transform,
            spec: spec_from_params(transform, &best.params)?,
            j: best.j,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "detector = \"{}\"", self.detector);
        let _ = writeln!(s, "transform = \"{}\"", self.transform);
        let _ = writeln!(s, "j = {}", self.j);
        match self.spec {
            TransformSpec::Identity => {}
            TransformSpec::Pca(PcaTarget::Count(n)) => {
                let _ = writeln!(s, "n_f = {n}");
            }
            TransformSpec::Pca(PcaTarget::Ratio(r)) => {
                let _ = writeln!(s, "variance_ratio = {r}");
            }
            TransformSpec::Autoencoder { params, .. } => {
                let _ = writeln!(s, "n_e1 = {}", params.n_e1);
                let _ = writeln!(s, "n_e2 = {}", params.n_e2);
                let _ = writeln!(s, "lr = {}", params.lr);
                let _ = writeln!(s, "batch_size = {}", params.batch_size);
                let _ = writeln!(s, "epochs = {}", params.epochs);
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected 'key = value'"))?;
            kv.push((k.trim().to_string(), v.trim().trim_matches('"').to_string()));
        }
        let get = |k: &str| {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::parse(0, format!("missing key '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(0, format!("key '{k}' is not a number")))
        };
        let int = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(0, format!("key '{k}' is not a nonnegative integer")))
        };
        let detector: DetectorKind = get("detector")?.parse()?;
        let transform: TransformKind = get("transform")?.parse()?;
        let spec = match transform {
            TransformKind::Of => TransformSpec::Identity,
            TransformKind::Pca => match int("n_f") {
                Ok(n) => TransformSpec::Pca(PcaTarget::Count(n)),
                Err(_) => TransformSpec::Pca(PcaTarget::Ratio(num("variance_ratio")?)),
            },
            TransformKind::Aer | TransformKind::Aea => {
                let mut params =
                    AeParams::new(int("n_e1")?, int("n_e2")?, num("lr")?, int("batch_size")?);
                if let Ok(e) = int("epochs") {
                    params.epochs = e;
                }
                spec_from_params(
                    transform,
                    &[
                        params.n_e1 as f64,
                        params.n_e2 as f64,
                        params.lr,
                        params.batch_size as f64,
                    ],
                )
                .map(|s| match s {
                    TransformSpec::Autoencoder { variant, .. } => {
                        TransformSpec::Autoencoder { variant, params }
                    }
                    other => other,
                })?
            }
        };
        Ok(Self {
            detector,
            transform,
            spec,
            j: num("j")?,
        })
    }
}
