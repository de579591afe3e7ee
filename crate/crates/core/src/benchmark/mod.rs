//! The evaluation protocol over every (detector × transform) combination.
//!
//! Each combination fits a [`Pipeline`] on the training slice, scores the
//! nominal and novelty slices plus every trace set, and fits an [`NmScaler`]
//! on the full trace. Combinations run in parallel; inference timing runs
//! afterwards, one combination at a time.

pub mod metrics;
pub mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::detectors::{DetectorConfig, DetectorKind, NmScaler};
use crate::features::{extract_all, WaveletSpec};
use crate::pipeline::{default_transform_spec, Pipeline};
use crate::signal::Dataset;
use crate::transform::{TransformKind, TransformSpec};
use crate::util::mean;
use crate::{Error, Result};

pub use metrics::{feature_percentage, measure_inference, nm_variance, reactivity, Timing};
pub use report::{
    config_hash, export_report, parse_report_csv, parse_traces_csv, write_report_csv,
    write_traces_csv, REPORT_HEADER, TRACES_HEADER,
};

/// Extracted features of one named set, one row per chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFeatures {
    pub name: String,
    pub rows: Vec<Vec<f64>>,
}

pub fn extract_dataset(ds: &Dataset, spec: &WaveletSpec) -> Result<Vec<SetFeatures>> {
    ds.sets()
        .iter()
        .map(|s| {
            Ok(SetFeatures {
                name: s.header.name.clone(),
                rows: extract_all(&s.chunks, spec)?,
            })
        })
        .collect()
}

/// Chunk range `[start, end)` of a named set; `end = None` runs to the last chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slice {
    pub set: String,
    pub start: usize,
    pub end: Option<usize>,
}

impl Slice {
    pub fn new(set: impl Into<String>, start: usize, end: Option<usize>) -> Self {
        Self {
            set: set.into(),
            start,
            end,
        }
    }

    fn range(&self, sets: &[SetFeatures]) -> Result<(usize, std::ops::Range<usize>)> {
        let idx = sets
            .iter()
            .position(|s| s.name == self.set)
            .ok_or_else(|| {
                Error::invalid(format!("protocol references missing set '{}'", self.set))
            })?;
        let len = sets[idx].rows.len();
        let end = self.end.unwrap_or(len);
        if self.start >= end || end > len {
            return Err(Error::invalid(format!(
                "slice {}[{}..{end}] is empty or exceeds {len} chunks",
                self.set, self.start
            )));
        }
        Ok((idx, self.start..end))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalProtocol {
    pub train: Slice,
    pub nominal: Slice,
    pub novelty: Option<Slice>,
    /// Sets scored for the trace, in order; empty means every set.
    pub trace: Vec<String>,
}

impl Default for EvalProtocol {
    /// First 100 chunks of set 1 for training, the rest of set 1 as nominal,
    /// set 5 as novelty.
    fn default() -> Self {
        Self {
            train: Slice::new("set1", 0, Some(100)),
            nominal: Slice::new("set1", 100, None),
            novelty: Some(Slice::new("set5", 0, None)),
            trace: Vec::new(),
        }
    }
}

impl EvalProtocol {
    fn trace_sets<'a>(&'a self, sets: &'a [SetFeatures]) -> Vec<&'a str> {
        if self.trace.is_empty() {
            sets.iter().map(|s| s.name.as_str()).collect()
        } else {
            self.trace.iter().map(String::as_str).collect()
        }
    }

    pub fn validate(&self, sets: &[SetFeatures]) -> Result<()> {
        let (ti, tr) = self.train.range(sets)?;
        let (ni, nr) = self.nominal.range(sets)?;
        if ti == ni && tr.start < nr.end && nr.start < tr.end {
            return Err(Error::invalid("train and nominal slices overlap"));
        }
        if let Some(n) = &self.novelty {
            n.range(sets)?;
        }
        for name in self.trace_sets(sets) {
            if !sets.iter().any(|s| s.name == name) {
                return Err(Error::invalid(format!(
                    "trace references missing set '{name}'"
                )));
            }
        }
        Ok(())
    }

    /// Training chunk rows.
    pub fn train_rows<'a>(&self, sets: &'a [SetFeatures]) -> Result<&'a [Vec<f64>]> {
        let (i, r) = self.train.range(sets)?;
        Ok(&sets[i].rows[r])
    }

    pub fn nominal_rows<'a>(&self, sets: &'a [SetFeatures]) -> Result<&'a [Vec<f64>]> {
        let (i, r) = self.nominal.range(sets)?;
        Ok(&sets[i].rows[r])
    }

    /// `(set, chunk)` pairs of the trace: every trace set minus the training chunks.
    pub fn trace_index(&self, sets: &[SetFeatures]) -> Result<Vec<(usize, usize)>> {
        let (ti, tr) = self.train.range(sets)?;
        let mut out = Vec::new();
        for name in self.trace_sets(sets) {
            let si = sets
                .iter()
                .position(|s| s.name == name)
                .ok_or_else(|| Error::invalid(format!("trace references missing set '{name}'")))?;
            out.extend(
                (0..sets[si].rows.len())
                    .filter(|c| si != ti || !tr.contains(c))
                    .map(|c| (si, c)),
            );
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub detectors: Vec<DetectorKind>,
    pub transforms: Vec<TransformKind>,
    pub detector: DetectorConfig,
    /// Replaces the default transform for a combination.
    pub overrides: BTreeMap<(DetectorKind, TransformKind), TransformSpec>,
    pub seed: u64,
    /// Minimum timed evaluations per combination; 0 disables timing.
    pub timing_evals: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            detectors: DetectorKind::ALL.to_vec(),
            transforms: TransformKind::ALL.to_vec(),
            detector: DetectorConfig::default(),
            overrides: BTreeMap::new(),
            seed: 0,
            timing_evals: 1000,
        }
    }
}

impl BenchConfig {
    pub fn transform_spec(&self, d: DetectorKind, t: TransformKind) -> TransformSpec {
        self.overrides
            .get(&(d, t))
            .copied()
            .unwrap_or_else(|| default_transform_spec(d, t))
    }

    pub fn combos(&self) -> Vec<(DetectorKind, TransformKind)> {
        self.detectors
            .iter()
            .flat_map(|&d| self.transforms.iter().map(move |&t| (d, t)))
            .collect()
    }
}

/// One report line. Absent values are `None` and print as empty CSV fields.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetricsRow {
    pub detector: DetectorKind,
    pub transform: TransformKind,
    pub n_f: Option<usize>,
    pub fp_pct: Option<f64>,
    pub variance_scaled: Option<f64>,
    pub variance_raw: Option<f64>,
    pub mean_nominal: Option<f64>,
    pub mean_novel: Option<f64>,
    pub reactivity: Option<f64>,
    pub infer_us_mean: Option<f64>,
    pub infer_us_median: Option<f64>,
    /// `|`-separated markers such as `extrapolated` or `failed: <reason>`.
    pub flags: String,
}

impl MetricsRow {
    fn empty(detector: DetectorKind, transform: TransformKind) -> Self {
        Self {
            detector,
            transform,
            n_f: None,
            fp_pct: None,
            variance_scaled: None,
            variance_raw: None,
            mean_nominal: None,
            mean_novel: None,
            reactivity: None,
            infer_us_mean: None,
            infer_us_median: None,
            flags: String::new(),
        }
    }

    fn flag(&mut self, f: &str) {
        let clean: String = f
            .chars()
            .map(|c| {
                if matches!(c, ',' | '\n' | '\r' | '|') {
                    ';'
                } else {
                    c
                }
            })
            .collect();
        if !self.flags.is_empty() {
            self.flags.push('|');
        }
        self.flags.push_str(&clean);
    }

    pub fn failed(&self) -> bool {
        self.flags.split('|').any(|f| f.starts_with("failed"))
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TraceRow {
    pub set: String,
    pub chunk: usize,
    pub detector: DetectorKind,
    pub transform: TransformKind,
    pub nm_raw: f64,
    pub nm_scaled: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub rows: Vec<MetricsRow>,
    pub traces: Vec<TraceRow>,
    /// Fitted pipelines with their scalers, for combinations that succeeded.
    pub pipelines: Vec<Pipeline>,
    /// Mean normalize + transform + NM time per feature vector, in microseconds.
    pub end_to_end_us: Vec<Option<f64>>,
    pub n_feat: usize,
}

struct Outcome {
    row: MetricsRow,
    traces: Vec<TraceRow>,
    pipeline: Option<Pipeline>,
}

fn run_combo(
    sets: &[SetFeatures],
    protocol: &EvalProtocol,
    cfg: &BenchConfig,
    trace_index: &[(usize, usize)],
    n_feat: usize,
    d: DetectorKind,
    t: TransformKind,
) -> Outcome {
    let mut row = MetricsRow::empty(d, t);
    let mut traces = Vec::new();
    let result = (|| -> Result<Pipeline> {
        let spec = cfg.transform_spec(d, t);
        let mut p = Pipeline::fit(
            protocol.train_rows(sets)?,
            d,
            &spec,
            &cfg.detector,
            cfg.seed,
        )?;
        let n_f = p.transform.output_dim();
        row.n_f = Some(n_f);
        row.fp_pct = Some(feature_percentage(n_f, n_feat)?);
        let nominal = p.novelty_all(protocol.nominal_rows(sets)?)?;
        let novel = match &protocol.novelty {
            Some(s) => {
                let (i, r) = s.range(sets)?;
                Some(p.novelty_all(&sets[i].rows[r])?)
            }
            None => None,
        };
        let trace_raw = trace_index
            .iter()
            .map(|&(s, c)| p.novelty(&sets[s].rows[c]))
            .collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = trace_raw.iter().chain(&nominal).find(|x| !x.is_finite()) {
            return Err(Error::Failed(format!("non-finite novelty score {bad}")));
        }
        row.variance_raw = Some(nm_variance(&nominal)?);
        let scaler = match NmScaler::fit(&trace_raw) {
            Ok(s) => Some(s),
            Err(e) => {
                row.flag(&format!("unscaled: {e}"));
                None
            }
        };
        if let Some(s) = scaler {
            let sn: Vec<f64> = nominal.iter().map(|x| s.scale(*x)).collect();
            row.variance_scaled = Some(nm_variance(&sn)?);
            row.mean_nominal = Some(mean(&sn));
            if let Some(novel) = &novel {
                let sv: Vec<f64> = novel.iter().map(|x| s.scale(*x)).collect();
                row.mean_novel = Some(mean(&sv));
                row.reactivity = Some(reactivity(&sn, &sv)?);
            }
            if nominal
                .iter()
                .chain(novel.iter().flatten())
                .any(|x| s.is_extrapolated(*x))
            {
                row.flag("extrapolated");
            }
        }
        traces = trace_index
            .iter()
            .zip(&trace_raw)
            .map(|(&(s, c), &nm)| TraceRow {
                set: sets[s].name.clone(),
                chunk: c,
                detector: d,
                transform: t,
                nm_raw: nm,
                nm_scaled: scaler.map(|sc| sc.scale(nm)),
            })
            .collect();
        p.scaler = scaler;
        Ok(p)
    })();
    let pipeline = match result {
        Ok(p) => Some(p),
        Err(e) => {
            row.flag(&format!("failed: {e}"));
            traces.clear();
            None
        }
    };
    Outcome {
        row,
        traces,
        pipeline,
    }
}

/// Runs every configured combination. Individual failures are recorded in
/// the row flags; only an invalid protocol or configuration is an error.
pub fn run_benchmark(
    sets: &[SetFeatures],
    protocol: &EvalProtocol,
    cfg: &BenchConfig,
) -> Result<BenchmarkResult> {
    protocol.validate(sets)?;
    let combos = cfg.combos();
    if combos.is_empty() {
        return Err(Error::invalid(
            "no detector × transform combinations selected",
        ));
    }
    let n_feat = crate::util::row_width(protocol.train_rows(sets)?)?;
    let trace_index = protocol.trace_index(sets)?;
    let outcomes: Vec<Outcome> = combos
        .par_iter()
        .map(|&(d, t)| run_combo(sets, protocol, cfg, &trace_index, n_feat, d, t))
        .collect();

    let nominal = protocol.nominal_rows(sets)?;
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::new();
    let mut pipelines = Vec::new();
    let mut end_to_end_us = Vec::new();
    for mut o in outcomes {
        let mut e2e = None;
        if let (Some(p), true) = (&o.pipeline, cfg.timing_evals > 0) {
            let latent = p.latent_all(nominal)?;
            let reps = metrics::reps_for(latent.len(), cfg.timing_evals);
            let t = measure_inference(&p.detector, &latent, reps)?;
            o.row.infer_us_mean = Some(t.mean_us);
            o.row.infer_us_median = Some(t.median_us);
            let full =
                metrics::time_evaluations(nominal, reps, |v| p.novelty(v).unwrap_or(f64::NAN))?;
            e2e = Some(full.mean_us);
        }
        rows.push(o.row);
        traces.extend(o.traces);
        end_to_end_us.push(e2e);
        if let Some(p) = o.pipeline {
            pipelines.push(p);
        }
    }
    Ok(BenchmarkResult {
        rows,
        traces,
        pipelines,
        end_to_end_us,
        n_feat,
    })
}
