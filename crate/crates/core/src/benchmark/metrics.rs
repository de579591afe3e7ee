//! Scalar metrics reported per (detector × transform) combination.

use std::hint::black_box;
use std::time::Instant;

use crate::detectors::Detector;
use crate::util::{mean, median, variance};
use crate::{Error, Result};

/// Population variance of novelty scores.
pub fn nm_variance(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::InsufficientData(
            "variance needs at least 2 scores".into(),
        ));
    }
    Ok(variance(scores))
}

/// `mean(novel) − mean(nominal)`; positive when novel data scores higher.
pub fn reactivity(nominal: &[f64], novel: &[f64]) -> Result<f64> {
    if nominal.is_empty() || novel.is_empty() {
        return Err(Error::InsufficientData(
            "reactivity needs nominal and novel scores".into(),
        ));
    }
    Ok(mean(novel) - mean(nominal))
}

/// Share of the extracted feature count kept by the latent space, in percent.
pub fn feature_percentage(n_f: usize, n_feat: usize) -> Result<f64> {
    if n_feat == 0 {
        return Err(Error::invalid("feature count must be positive"));
    }
    Ok(100.0 * n_f as f64 / n_feat as f64)
}

/// Per-evaluation wall-clock statistics in microseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean_us: f64,
    pub median_us: f64,
    pub evaluations: usize,
}

/// Times `f` over `reps` passes of `samples` after one warm-up pass.
///
/// The mean comes from the whole timed loop; the median from per-call times.
pub fn time_evaluations<F: Fn(&[f64]) -> f64>(
    samples: &[Vec<f64>],
    reps: usize,
    f: F,
) -> Result<Timing> {
    if samples.is_empty() || reps == 0 {
        return Err(Error::invalid("timing needs samples and reps >= 1"));
    }
    for s in samples {
        black_box(f(black_box(s)));
    }
    let mut per_call = Vec::with_capacity(samples.len() * reps);
    let start = Instant::now();
    for _ in 0..reps {
        for s in samples {
            let t = Instant::now();
            black_box(f(black_box(s)));
            per_call.push(t.elapsed().as_secs_f64() * 1e6);
        }
    }
    let total = start.elapsed().as_secs_f64() * 1e6;
    let evaluations = per_call.len();
    Ok(Timing {
        mean_us: (total / evaluations as f64).max(f64::MIN_POSITIVE),
        median_us: median(&per_call),
        evaluations,
    })
}

/// Times the detector's novelty metric alone on already transformed vectors.
pub fn measure_inference(detector: &Detector, samples: &[Vec<f64>], reps: usize) -> Result<Timing> {
    if let Some(s) = samples.iter().find(|s| s.len() != detector.dim()) {
        return Err(Error::DimensionMismatch {
            expected: detector.dim(),
            got: s.len(),
        });
    }
    time_evaluations(samples, reps, |v| detector.novelty_unchecked(v))
}

/// Passes needed so that at least `max(min_evals, n)` evaluations run.
pub fn reps_for(n: usize, min_evals: usize) -> usize {
    min_evals.max(n).div_ceil(n.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_values() {
        assert_eq!(nm_variance(&[0.0, 1.0]).unwrap(), 0.25);
        assert_eq!(nm_variance(&[3.0; 5]).unwrap(), 0.0);
        assert!(nm_variance(&[1.0]).is_err());
        assert_eq!(reactivity(&[0.0, 0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(feature_percentage(70, 70).unwrap(), 100.0);
        assert!((feature_percentage(3, 70).unwrap() - 4.2857).abs() < 1e-4);
        assert!((feature_percentage(85, 70).unwrap() - 121.43).abs() < 1e-2);
        assert_eq!(reps_for(106, 1000), 10);
        assert_eq!(reps_for(2000, 1000), 1);
    }

    #[test]
    fn timing_positive() {
        let samples = vec![vec![1.0, 2.0]; 10];
        let t = time_evaluations(&samples, 3, |v| v[0] + v[1]).unwrap();
        assert_eq!(t.evaluations, 30);
        assert!(t.mean_us > 0.0);
    }
}
