//! Text dataset file.
//!
//! ```text
//! # novelbench dataset v1
//! set,<name>,<signal_type>,<p2p>,<fs>,<chunk_len>
//! <s0>,<s1>,...        one chunk per line
//! ...
//! end,<total_chunks>
//! ```
//!
//! Values are written with the shortest representation that round-trips, so a
//! save/load cycle is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, SetHeader, SignalSet, TimeSeries};
use crate::{Error, Result};

const MAGIC: &str = "# novelbench dataset v1";

pub fn write_dataset<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC}")?;
    let mut total = 0usize;
    for set in ds.sets() {
        let h = &set.header;
        writeln!(
            w,
            "set,{},{},{},{},{}",
            h.name, h.signal_type, h.p2p, h.sample_rate, h.chunk_len
        )?;
        for c in &set.chunks {
            let mut first = true;
            for x in c.samples() {
                if !first {
                    w.write_all(b",")?;
                }
                write!(w, "{x}")?;
                first = false;
            }
            w.write_all(b"\n")?;
        }
        total += set.chunks.len();
    }
    writeln!(w, "end,{total}")?;
    w.flush()?;
    Ok(())
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let f = File::create(path)?;
    write_dataset(ds, BufWriter::new(f))
}

fn field<'a>(parts: &[&'a str], idx: usize, name: &str, line: usize) -> Result<&'a str> {
    parts
        .get(idx)
        .copied()
        .ok_or_else(|| Error::parse(line, format!("missing field '{name}'")))
}

fn num(s: &str, name: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("field '{name}': '{s}' is not a number")))
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset> {
    let reader = BufReader::new(r);
    let mut ds = Dataset::default();
    let mut current: Option<SignalSet> = None;
    let mut expected_width = 0usize;
    let mut seen_end = false;
    let mut total = 0usize;

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if seen_end {
            return Err(Error::parse(lineno, "content after end marker"));
        }
        if let Some(rest) = line.strip_prefix("set,") {
            if let Some(done) = current.take() {
                ds.push(done)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 5 {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "set header needs 5 fields after 'set', found {}",
                        parts.len()
                    ),
                ));
            }
            let name = field(&parts, 0, "name", lineno)?.to_string();
            let signal_type = field(&parts, 1, "signal_type", lineno)?
                .parse()
                .map_err(|e: Error| Error::parse(lineno, format!("field 'signal_type': {e}")))?;
            let p2p = num(parts[2], "p2p", lineno)?;
            let sample_rate = num(parts[3], "fs", lineno)?;
            let chunk_len = num(parts[4], "chunk_len", lineno)?;
            if !(sample_rate > 0.0) || !(chunk_len > 0.0) {
                return Err(Error::parse(lineno, "fs and chunk_len must be positive"));
            }
            expected_width = (sample_rate * chunk_len).round() as usize;
            current = Some(SignalSet {
                header: SetHeader {
                    name,
                    signal_type,
                    p2p,
                    sample_rate,
                    chunk_len,
                },
                chunks: Vec::new(),
            });
        } else if let Some(rest) = line.strip_prefix("end,") {
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("field 'total_chunks': '{rest}'")))?;
            if let Some(done) = current.take() {
                ds.push(done)
                    .map_err(|e| Error::parse(lineno, e.to_string()))?;
            }
            if n != total {
                return Err(Error::parse(
                    lineno,
                    format!("end marker announces {n} chunks but {total} were read"),
                ));
            }
            seen_end = true;
        } else {
            let set = current
                .as_mut()
                .ok_or_else(|| Error::parse(lineno, "chunk record before any set header"))?;
            let samples = line
                .split(',')
                .enumerate()
                .map(|(j, s)| num(s, &format!("sample {j}"), lineno))
                .collect::<Result<Vec<_>>>()?;
            if samples.len() != expected_width {
                return Err(Error::parse(
                    lineno,
                    format!(
                        "chunk has {} samples, expected {expected_width}",
                        samples.len()
                    ),
                ));
            }
            let ts = TimeSeries::new(samples, set.header.sample_rate)
                .map_err(|e| Error::parse(lineno, e.to_string()))?;
            set.chunks.push(ts);
            total += 1;
        }
    }
    if !seen_end {
        return Err(Error::parse(0, "truncated file: missing end marker"));
    }
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}
