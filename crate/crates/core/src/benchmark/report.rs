//! Report files: `report.csv`, `traces.csv` and `report.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{BenchConfig, BenchmarkResult, EvalProtocol, MetricsRow, TraceRow};
use crate::util::sha256_hex;
use crate::{Error, Result};

pub const REPORT_HEADER: &str = "detector,transform,n_f,fp_pct,variance_scaled,variance_raw,mean_nominal,mean_novel,reactivity,infer_us_mean,infer_us_median,flags";
pub const TRACES_HEADER: &str = "set,chunk,detector,transform,nm_raw,nm_scaled";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_report_csv<W: Write>(rows: &[MetricsRow], mut w: W) -> Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.detector,
            r.transform,
            opt(r.n_f),
            opt(r.fp_pct),
            opt(r.variance_scaled),
            opt(r.variance_raw),
            opt(r.mean_nominal),
            opt(r.mean_novel),
            opt(r.reactivity),
            opt(r.infer_us_mean),
            opt(r.infer_us_median),
            r.flags
        )?;
    }
    Ok(())
}

pub fn write_traces_csv<W: Write>(traces: &[TraceRow], mut w: W) -> Result<()> {
    writeln!(w, "{TRACES_HEADER}")?;
    for t in traces {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t.set,
            t.chunk,
            t.detector,
            t.transform,
            t.nm_raw,
            opt(t.nm_scaled)
        )?;
    }
    Ok(())
}

fn parse_opt<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| Error::parse(line, format!("column {col}: cannot parse '{s}'")))
}

fn fields<'a>(text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == header => {}
        _ => return Err(Error::parse(1, "missing or unexpected header")),
    }
    let width = header.split(',').count();
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != width {
                return Err(Error::parse(
                    i + 1,
                    format!("expected {width} fields, found {}", f.len()),
                ));
            }
            Ok((i + 1, f))
        })
        .collect()
}

pub fn parse_report_csv(text: &str) -> Result<Vec<MetricsRow>> {
    fields(text, REPORT_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            let num = |i: usize, name: &str| parse_opt::<f64>(f[i], line, name);
            Ok(MetricsRow {
                detector: f[0]
                    .parse()
                    .map_err(|e: Error| Error::parse(line, e.to_string()))?,
                transform: f[1]
                    .parse()
                    .map_err(|e: Error| Error::parse(line, e.to_string()))?,
                n_f: parse_opt(f[2], line, "n_f")?,
                fp_pct: num(3, "fp_pct")?,
                variance_scaled: num(4, "variance_scaled")?,
                variance_raw: num(5, "variance_raw")?,
                mean_nominal: num(6, "mean_nominal")?,
                mean_novel: num(7, "mean_novel")?,
                reactivity: num(8, "reactivity")?,
                infer_us_mean: num(9, "infer_us_mean")?,
                infer_us_median: num(10, "infer_us_median")?,
                flags: f[11].to_string(),
            })
        })
        .collect()
}

pub fn parse_traces_csv(text: &str) -> Result<Vec<TraceRow>> {
    fields(text, TRACES_HEADER)?
        .into_iter()
        .map(|(line, f)| {
            Ok(TraceRow {
                set: f[0].to_string(),
                chunk: parse_opt(f[1], line, "chunk")?
                    .ok_or_else(|| Error::parse(line, "empty chunk"))?,
                detector: f[2]
                    .parse()
                    .map_err(|e: Error| Error::parse(line, e.to_string()))?,
                transform: f[3]
                    .parse()
                    .map_err(|e: Error| Error::parse(line, e.to_string()))?,
                nm_raw: parse_opt(f[4], line, "nm_raw")?
                    .ok_or_else(|| Error::parse(line, "empty nm_raw"))?,
                nm_scaled: parse_opt(f[5], line, "nm_scaled")?,
            })
        })
        .collect()
}

/// Hash of every setting that influences the report, plus caller context
/// (dataset and wavelet settings).
pub fn config_hash(protocol: &EvalProtocol, cfg: &BenchConfig, context: &str) -> String {
    let mut desc = format!(
        "{protocol:?}\n{:?}\n{:?}\n{}\n{}\n",
        cfg.detector,
        cfg.combos(),
        cfg.seed,
        context
    );
    for (d, t) in cfg.combos() {
        desc.push_str(&format!("{d}/{t}: {:?}\n", cfg.transform_spec(d, t)));
    }
    sha256_hex(desc.as_bytes())
}

/// Writes the three report files into `dir` and returns their paths.
pub fn export_report(
    result: &BenchmarkResult,
    seed: u64,
    config_hash: &str,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() {
        return Err(Error::invalid("no report rows to export"));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let report = dir.join("report.csv");
    let traces = dir.join("traces.csv");
    let meta = dir.join("report.json");
    let mut buf = Vec::new();
    write_report_csv(&result.rows, &mut buf)?;
    fs::write(&report, &buf)?;
    buf.clear();
    write_traces_csv(&result.traces, &mut buf)?;
    fs::write(&traces, &buf)?;
    let rows: Vec<_> = result
        .rows
        .iter()
        .zip(&result.end_to_end_us)
        .map(|(r, e2e)| {
            let mut v = serde_json::to_value(r).expect("row serializes");
            v["end_to_end_us_mean"] = json!(e2e);
            v
        })
        .collect();
    let doc = json!({
        "tool": "novelbench",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "config_hash": config_hash,
        "n_feat": result.n_feat,
        "trace_chunks": result.traces.iter().filter(|t| t.detector == result.rows[0].detector && t.transform == result.rows[0].transform).count(),
        "columns": REPORT_HEADER.split(',').collect::<Vec<_>>(),
        "rows": rows,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Failed(e.to_string()))?;
    fs::write(&meta, text + "\n")?;
    Ok(vec![report, traces, meta])
}
