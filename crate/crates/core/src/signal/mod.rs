//! Synthetic shaker signals and the chunked dataset built from them.
//!
//! The drive signals are sums of sines. A set is produced by synthesizing one
//! long record, scaling it to a peak-to-peak target, optionally adding white
//! Gaussian noise and splitting it into fixed-length chunks.

mod io;

use std::f64::consts::TAU;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::util::{derive_seed, rng};
use crate::{Error, Result};

pub use io::{load_dataset, read_dataset, save_dataset, write_dataset};

/// Sampling rate of the reference accelerometer.
pub const DEFAULT_SAMPLE_RATE: f64 = 1666.0;
/// Harmonic frequencies shared by both drive signals.
pub const DRIVE_FREQUENCIES: [f64; 9] =
    [50.0, 100.0, 150.0, 230.0, 300.0, 440.0, 460.0, 530.0, 600.0];
pub const V1_WEIGHTS: [f64; 9] = [0.5, 0.5, 0.5, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5];
pub const V2_WEIGHTS: [f64; 9] = [0.5, 0.5, 0.5, 1.0, 0.2, 1.0, 0.5, 0.5, 2.0];

/// Weighted sum of sines.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpec {
    weights: Vec<f64>,
    frequencies: Vec<f64>,
}

impl HarmonicSpec {
    pub fn new(weights: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("at least one harmonic is required"));
        }
        if weights.len() != frequencies.len() {
            return Err(Error::invalid(format!(
                "{} weights but {} frequencies",
                weights.len(),
                frequencies.len()
            )));
        }
        if let Some(f) = frequencies.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
            return Err(Error::invalid(format!("frequency {f} must be positive")));
        }
        Ok(Self {
            weights,
            frequencies,
        })
    }

    pub fn v1() -> Self {
        Self {
            weights: V1_WEIGHTS.to_vec(),
            frequencies: DRIVE_FREQUENCIES.to_vec(),
        }
    }

    pub fn v2() -> Self {
        Self {
            weights: V2_WEIGHTS.to_vec(),
            frequencies: DRIVE_FREQUENCIES.to_vec(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn max_frequency(&self) -> f64 {
        self.frequencies.iter().copied().fold(f64::MIN, f64::max)
    }
}

/// One fixed-rate acceleration record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::invalid(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a time series needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn peak_to_peak(&self) -> f64 {
        let (lo, hi) = min_max(&self.samples);
        hi - lo
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

fn min_max(xs: &[f64]) -> (f64, f64) {
    xs.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Samples `Σ wᵢ·sin(2π·fᵢ·k/fs)` for `k = 0 .. duration·fs`.
pub fn synth_signal(spec: &HarmonicSpec, duration: f64, fs: f64) -> Result<TimeSeries> {
    let max_freq = spec.max_frequency();
    if !(fs > 2.0 * max_freq) {
        return Err(Error::Nyquist {
            fs,
            max_freq,
            need: 2.0 * max_freq,
        });
    }
    if !(duration > 0.0) {
        return Err(Error::invalid(format!(
            "duration {duration} must be positive"
        )));
    }
    let n = (duration * fs).round() as usize;
    let samples = (0..n)
        .map(|k| {
            let k = k as f64;
            spec.weights
                .iter()
                .zip(&spec.frequencies)
                .map(|(w, f)| w * (TAU * f * k / fs).sin())
                .sum()
        })
        .collect();
    TimeSeries::new(samples, fs)
}

/// Rescales a record so that `max − min` equals `target_p2p`.
pub fn scale_to_p2p(ts: &TimeSeries, target_p2p: f64) -> Result<TimeSeries> {
    if !(target_p2p > 0.0) {
        return Err(Error::invalid(format!(
            "target p2p {target_p2p} must be positive"
        )));
    }
    let p2p = ts.peak_to_peak();
    if !(p2p > 0.0) {
        return Err(Error::Degenerate(
            "constant signal has no peak-to-peak amplitude to scale".into(),
        ));
    }
    let gain = target_p2p / p2p;
    let samples = ts.samples.iter().map(|x| x * gain).collect();
    TimeSeries::new(samples, ts.sample_rate)
}

/// Splits a record into consecutive chunks of `chunk_len` seconds, dropping the remainder.
pub fn chunk(ts: &TimeSeries, chunk_len: f64) -> Result<Vec<TimeSeries>> {
    let width = chunk_len * ts.sample_rate;
    let rounded = width.round();
    if !(rounded >= 1.0) || (width - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(Error::invalid(format!(
            "chunk length {chunk_len} s is not a positive whole number of samples at {} Hz",
            ts.sample_rate
        )));
    }
    let width = rounded as usize;
    if width > ts.len() {
        return Err(Error::InsufficientData(format!(
            "chunk of {width} samples is longer than the {}-sample signal",
            ts.len()
        )));
    }
    ts.samples
        .chunks_exact(width)
        .map(|c| TimeSeries::new(c.to_vec(), ts.sample_rate))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalType {
    V1,
    V2,
}

impl SignalType {
    pub fn harmonics(self) -> HarmonicSpec {
        match self {
            SignalType::V1 => HarmonicSpec::v1(),
            SignalType::V2 => HarmonicSpec::v2(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignalType::V1 => "v1",
            SignalType::V2 => "v2",
        }
    }
}

impl std::str::FromStr for SignalType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v1" => Ok(SignalType::V1),
            "v2" => Ok(SignalType::V2),
            other => Err(Error::invalid(format!("unknown signal type '{other}'"))),
        }
    }
}

impl std::fmt::Display for SignalType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recipe for one recorded set.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub set_name: String,
    pub signal_type: SignalType,
    pub target_p2p: f64,
    pub duration: f64,
    pub chunk_len: f64,
    pub sample_rate: f64,
    pub noise_sigma: Option<f64>,
}

impl DatasetSpec {
    pub fn new(set_name: impl Into<String>, signal_type: SignalType, target_p2p: f64) -> Self {
        Self {
            set_name: set_name.into(),
            signal_type,
            target_p2p,
            duration: 206.0,
            chunk_len: 1.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            noise_sigma: None,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = Some(sigma);
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.set_name.is_empty() || self.set_name.contains([',', '\n', '\r']) {
            return Err(Error::invalid(format!(
                "invalid set name '{}'",
                self.set_name
            )));
        }
        if !(self.target_p2p > 0.0) {
            return Err(Error::invalid(format!(
                "set {}: target p2p must be positive",
                self.set_name
            )));
        }
        if !(self.chunk_len > 0.0) || !(self.duration > 0.0) {
            return Err(Error::invalid(format!(
                "set {}: duration and chunk length must be positive",
                self.set_name
            )));
        }
        let ratio = self.duration / self.chunk_len;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::invalid(format!(
                "set {}: duration {} s is not a whole number of {} s chunks",
                self.set_name, self.duration, self.chunk_len
            )));
        }
        if let Some(s) = self.noise_sigma {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!(
                    "set {}: noise sigma must be finite and nonnegative",
                    self.set_name
                )));
            }
        }
        Ok(())
    }
}

/// The eight shaker sets: v1 at five amplitudes, then v2 at three.
pub fn default_specs() -> Vec<DatasetSpec> {
    let v1 = [0.25, 0.50, 0.75, 1.00, 1.25];
    let v2 = [0.50, 0.75, 1.00];
    v1.iter()
        .map(|&p| (SignalType::V1, p))
        .chain(v2.iter().map(|&p| (SignalType::V2, p)))
        .enumerate()
        .map(|(i, (ty, p))| DatasetSpec::new(format!("set{}", i + 1), ty, p))
        .collect()
}

/// Per-set metadata as persisted in the dataset file header.
#[derive(Debug, Clone, PartialEq)]
pub struct SetHeader {
    pub name: String,
    pub signal_type: SignalType,
    pub p2p: f64,
    pub sample_rate: f64,
    pub chunk_len: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    pub header: SetHeader,
    pub chunks: Vec<TimeSeries>,
}

/// Ordered collection of named sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    sets: Vec<SignalSet>,
}

impl Dataset {
    pub fn new(sets: Vec<SignalSet>) -> Result<Self> {
        let mut ds = Dataset::default();
        for s in sets {
            ds.push(s)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, set: SignalSet) -> Result<()> {
        if self.get(&set.header.name).is_some() {
            return Err(Error::invalid(format!(
                "duplicate set name '{}'",
                set.header.name
            )));
        }
        if let Some(first) = set.chunks.first() {
            if set
                .chunks
                .iter()
                .any(|c| c.len() != first.len() || c.sample_rate() != first.sample_rate())
            {
                return Err(Error::invalid(format!(
                    "set {}: chunks differ in length or sample rate",
                    set.header.name
                )));
            }
        }
        self.sets.push(set);
        Ok(())
    }

    pub fn sets(&self) -> &[SignalSet] {
        &self.sets
    }

    pub fn get(&self, name: &str) -> Option<&SignalSet> {
        self.sets.iter().find(|s| s.header.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.sets.iter().map(|s| s.header.name.as_str()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Keeps only the named sets, in the given order.
    pub fn select(&self, names: &[String]) -> Result<Dataset> {
        let sets = names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("dataset has no set '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(sets)
    }
}

fn generate_set(spec: &DatasetSpec, seed: u64) -> Result<SignalSet> {
    spec.validate()?;
    let raw = synth_signal(
        &spec.signal_type.harmonics(),
        spec.duration,
        spec.sample_rate,
    )?;
    let mut scaled = scale_to_p2p(&raw, spec.target_p2p)?;
    if let Some(sigma) = spec.noise_sigma.filter(|s| *s > 0.0) {
        let mut rng = rng(derive_seed(seed, &spec.set_name));
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let samples = scaled
            .samples
            .iter()
            .map(|x| x + normal.sample(&mut rng))
            .collect();
        scaled = TimeSeries::new(samples, spec.sample_rate)?;
    }
    let chunks = chunk(&scaled, spec.chunk_len)?;
    Ok(SignalSet {
        header: SetHeader {
            name: spec.set_name.clone(),
            signal_type: spec.signal_type,
            p2p: spec.target_p2p,
            sample_rate: spec.sample_rate,
            chunk_len: spec.chunk_len,
        },
        chunks,
    })
}

/// Generates every set; noise streams are derived from `(seed, set_name)`.
pub fn generate_dataset(specs: &[DatasetSpec], seed: u64) -> Result<Dataset> {
    if specs.is_empty() {
        return Err(Error::invalid("no dataset specs given"));
    }
    for (i, a) in specs.iter().enumerate() {
        if specs[..i].iter().any(|b| b.set_name == a.set_name) {
            return Err(Error::invalid(format!(
                "duplicate set name '{}'",
                a.set_name
            )));
        }
    }
    let sets = specs
        .par_iter()
        .map(|s| generate_set(s, seed))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(sets)
}
