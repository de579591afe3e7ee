//! Feature extraction: six statistical moments followed by the `2^L`
//! wavelet-packet sub-band norms.

mod normalizer;
pub mod wavelet;

use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;

use crate::signal::TimeSeries;
use crate::{Error, Result};

pub use normalizer::Normalizer;
pub use wavelet::{wpd_leaves, wpd_norms, WaveletSpec};

pub const N_STAT: usize = 6;
pub const STAT_NAMES: [&str; N_STAT] = ["mean", "rms", "p2p", "std", "skew", "kurt"];

/// Mean, RMS, peak-to-peak, population STD, skewness and excess kurtosis.
///
/// Skewness and kurtosis are 0 for a constant signal.
pub fn stat_features(x: &[f64]) -> Result<[f64; N_STAT]> {
    if x.is_empty() {
        return Err(Error::InsufficientData("empty signal".into()));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let std = m2.sqrt();
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / (m2 * std), m4 / (m2 * m2) - 3.0)
    } else {
        (0.0, 0.0)
    };
    Ok([mean, rms, hi - lo, std, skew, kurt])
}

/// Number of extracted features for a given depth, `2^L + 6`.
pub fn feature_count(spec: &WaveletSpec) -> usize {
    spec.n_leaves() + N_STAT
}

/// Column names in extraction order.
pub fn feature_names(spec: &WaveletSpec) -> Vec<String> {
    STAT_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain((0..spec.n_leaves()).map(|i| format!("wpd_{i:03}")))
        .collect()
}

/// Full feature vector `[stats ‖ wpd norms]` of one chunk.
pub fn extract(ts: &TimeSeries, spec: &WaveletSpec) -> Result<Vec<f64>> {
    let x = ts.samples();
    let norms = wpd_norms(x, spec)?;
    let mut out = Vec::with_capacity(feature_count(spec));
    out.extend_from_slice(&stat_features(x)?);
    out.extend(norms);
    Ok(out)
}

/// Extracts every chunk in parallel, preserving order.
pub fn extract_all(chunks: &[TimeSeries], spec: &WaveletSpec) -> Result<Vec<Vec<f64>>> {
    chunks.par_iter().map(|c| extract(c, spec)).collect()
}

/// Writes a feature matrix: header row of names, then one row per chunk.
pub fn write_feature_matrix<W: Write>(names: &[String], rows: &[Vec<f64>], mut w: W) -> Result<()> {
    writeln!(w, "{}", names.join(","))?;
    for row in rows {
        if row.len() != names.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: row.len(),
            });
        }
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_matrix<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(r).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    let names: Vec<String> = header.trim_end().split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(j, s)| {
                s.parse::<f64>().map_err(|_| {
                    let col = names.get(j).map(String::as_str).unwrap_or("?");
                    Error::parse(lineno, format!("column '{col}': '{s}' is not a number"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != names.len() {
            return Err(Error::parse(
                lineno,
                format!("{} values for {} columns", row.len(), names.len()),
            ));
        }
        rows.push(row);
    }
    Ok((names, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn constant_signal_stats() {
        let s = stat_features(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(s, [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_point_symmetric_stats() {
        let s = stat_features(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        let want = [0.0, 1.0, 2.0, 1.0, 0.0, -2.0];
        for (a, b) in s.iter().zip(want) {
            assert!(close(*a, b), "{s:?}");
        }
    }

    #[test]
    fn empty_rejected() {
        assert!(stat_features(&[]).is_err());
    }

    #[test]
    fn extract_lengths() {
        let ts = TimeSeries::new((0..1666).map(|k| (k as f64).sin()).collect(), 1666.0).unwrap();
        assert_eq!(extract(&ts, &WaveletSpec::default()).unwrap().len(), 70);
        let l0 = WaveletSpec::new(4, 0).unwrap();
        assert_eq!(extract(&ts, &l0).unwrap().len(), 7);
        assert_eq!(feature_names(&WaveletSpec::default()).len(), 70);
        assert_eq!(feature_names(&l0)[6], "wpd_000");
    }

    #[test]
    fn zero_signal_features_are_zero() {
        let ts = TimeSeries::new(vec![0.0; 1666], 1666.0).unwrap();
        let f = extract(&ts, &WaveletSpec::default()).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn feature_matrix_round_trip() {
        let names = vec!["a".to_string(), "b".to_string()];
        let rows = vec![vec![0.1, -2.5e-17], vec![3.0, 1e300]];
        let mut buf = Vec::new();
        write_feature_matrix(&names, &rows, &mut buf).unwrap();
        let (n2, r2) = read_feature_matrix(buf.as_slice()).unwrap();
        assert_eq!(names, n2);
        assert_eq!(rows, r2);
    }

    #[test]
    fn ragged_feature_row_rejected() {
        let text = "a,b\n1,2\n3\n";
        let err = read_feature_matrix(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }
}
