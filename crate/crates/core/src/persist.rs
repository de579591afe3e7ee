//! Self-describing text format for fitted models.
//!
//! ```text
//! begin <kind>
//! scalar <name> <value>
//! text <name> <value>
//! block <name> <rows> <cols>
//! <row 0 values, comma separated>
//! ...
//! end
//! ```
//!
//! A file may hold several documents back to back. Numbers are written with
//! their shortest round-trip representation.

use std::io::{BufRead, BufReader, Read, Write};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Scalar(String, f64),
    Text(String, String),
    Block {
        name: String,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelDoc {
    pub kind: String,
    pub entries: Vec<Entry>,
}

impl ModelDoc {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            entries: Vec::new(),
        }
    }

    pub fn scalar(&mut self, name: &str, v: f64) -> &mut Self {
        self.entries.push(Entry::Scalar(name.into(), v));
        self
    }

    pub fn text(&mut self, name: &str, v: impl Into<String>) -> &mut Self {
        self.entries.push(Entry::Text(name.into(), v.into()));
        self
    }

    pub fn vector(&mut self, name: &str, v: &[f64]) -> &mut Self {
        self.block(name, 1, v.len(), v.to_vec())
    }

    pub fn block(&mut self, name: &str, rows: usize, cols: usize, data: Vec<f64>) -> &mut Self {
        debug_assert_eq!(rows * cols, data.len());
        self.entries.push(Entry::Block {
            name: name.into(),
            rows,
            cols,
            data,
        });
        self
    }

    pub fn matrix(&mut self, name: &str, rows: &[Vec<f64>]) -> &mut Self {
        let cols = rows.first().map_or(0, Vec::len);
        let data = rows.iter().flatten().copied().collect();
        self.block(name, rows.len(), cols, data)
    }

    fn missing(&self, name: &str) -> Error {
        Error::parse(0, format!("{} model: missing entry '{name}'", self.kind))
    }

    pub fn get_scalar(&self, name: &str) -> Result<f64> {
        self.entries
            .iter()
            .find_map(|e| match e {
                Entry::Scalar(n, v) if n == name => Some(*v),
                _ => None,
            })
            .ok_or_else(|| self.missing(name))
    }

    pub fn get_usize(&self, name: &str) -> Result<usize> {
        let v = self.get_scalar(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::parse(
                0,
                format!("entry '{name}' = {v} is not a count"),
            ));
        }
        Ok(v as usize)
    }

    pub fn get_text(&self, name: &str) -> Result<&str> {
        self.entries
            .iter()
            .find_map(|e| match e {
                Entry::Text(n, v) if n == name => Some(v.as_str()),
                _ => None,
            })
            .ok_or_else(|| self.missing(name))
    }

    pub fn get_block(&self, name: &str) -> Result<(usize, usize, &[f64])> {
        self.entries
            .iter()
            .find_map(|e| match e {
                Entry::Block {
                    name: n,
                    rows,
                    cols,
                    data,
                } if n == name => Some((*rows, *cols, data.as_slice())),
                _ => None,
            })
            .ok_or_else(|| self.missing(name))
    }

    pub fn get_vector(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.get_block(name)?.2.to_vec())
    }

    pub fn get_matrix(&self, name: &str) -> Result<Vec<Vec<f64>>> {
        let (rows, cols, data) = self.get_block(name)?;
        if cols == 0 {
            return Ok(vec![Vec::new(); rows]);
        }
        Ok(data.chunks(cols).map(<[f64]>::to_vec).collect())
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::parse(
                0,
                format!("expected a '{kind}' model, found '{}'", self.kind),
            ));
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    parts.join(",")
}

pub fn write_docs<W: Write>(docs: &[ModelDoc], mut w: W) -> Result<()> {
    for doc in docs {
        writeln!(w, "begin {}", doc.kind)?;
        for e in &doc.entries {
            match e {
                Entry::Scalar(n, v) => writeln!(w, "scalar {n} {v}")?,
                Entry::Text(n, v) => writeln!(w, "text {n} {v}")?,
                Entry::Block {
                    name,
                    rows,
                    cols,
                    data,
                } => {
                    writeln!(w, "block {name} {rows} {cols}")?;
                    if *cols > 0 {
                        for row in data.chunks(*cols) {
                            writeln!(w, "{}", join(row))?;
                        }
                    }
                }
            }
        }
        writeln!(w, "end")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_docs<R: Read>(r: R) -> Result<Vec<ModelDoc>> {
    let lines: Vec<String> = BufReader::new(r).lines().collect::<std::io::Result<_>>()?;
    let mut docs = Vec::new();
    let mut current: Option<ModelDoc> = None;
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim_end();
        i += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        match head {
            "begin" => {
                if current.is_some() {
                    return Err(Error::parse(lineno, "nested 'begin'"));
                }
                current = Some(ModelDoc::new(rest.trim()));
            }
            "end" => {
                docs.push(
                    current
                        .take()
                        .ok_or_else(|| Error::parse(lineno, "'end' without 'begin'"))?,
                );
            }
            "scalar" | "text" | "block" => {
                let doc = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "entry outside a model document"))?;
                let (name, value) = rest
                    .split_once(' ')
                    .ok_or_else(|| Error::parse(lineno, format!("malformed {head} entry")))?;
                match head {
                    "scalar" => {
                        let v = value.trim().parse::<f64>().map_err(|_| {
                            Error::parse(lineno, format!("scalar '{name}': bad value '{value}'"))
                        })?;
                        doc.entries.push(Entry::Scalar(name.into(), v));
                    }
                    "text" => doc.entries.push(Entry::Text(name.into(), value.into())),
                    _ => {
                        let dims: Vec<usize> = value
                            .split_whitespace()
                            .map(|s| s.parse::<usize>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| {
                                Error::parse(lineno, format!("block '{name}': bad dimensions"))
                            })?;
                        let [rows, cols] = dims[..] else {
                            return Err(Error::parse(
                                lineno,
                                format!("block '{name}': expected rows and cols"),
                            ));
                        };
                        let mut data = Vec::with_capacity(rows * cols);
                        let body_rows = if cols == 0 { 0 } else { rows };
                        for r in 0..body_rows {
                            let rowno = i + 1;
                            let row = lines.get(i).ok_or_else(|| {
                                Error::parse(rowno, format!("block '{name}': missing row {r}"))
                            })?;
                            i += 1;
                            let before = data.len();
                            for (c, s) in row.trim_end().split(',').enumerate() {
                                data.push(s.parse::<f64>().map_err(|_| {
                                    Error::parse(
                                        rowno,
                                        format!("block '{name}' row {r} col {c}: bad value '{s}'"),
                                    )
                                })?);
                            }
                            if data.len() - before != cols {
                                return Err(Error::parse(
                                    rowno,
                                    format!(
                                        "block '{name}' row {r}: {} values, expected {cols}",
                                        data.len() - before
                                    ),
                                ));
                            }
                        }
                        doc.entries.push(Entry::Block {
                            name: name.into(),
                            rows,
                            cols,
                            data,
                        });
                    }
                }
            }
            other => return Err(Error::parse(lineno, format!("unknown directive '{other}'"))),
        }
    }
    if current.is_some() {
        return Err(Error::parse(lines.len(), "truncated model: missing 'end'"));
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn docs_round_trip() {
        let mut a = ModelDoc::new("pca");
        a.scalar("n_f", 3.0)
            .text("note", "hello world")
            .matrix("m", &[vec![0.1, 1e-300], vec![-2.0, 3.5]])
            .vector("empty", &[]);
        let b = ModelDoc::new("identity");
        let mut buf = Vec::new();
        write_docs(&[a.clone(), b.clone()], &mut buf).unwrap();
        let back = read_docs(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
        assert_eq!(back[0].get_matrix("m").unwrap()[1], vec![-2.0, 3.5]);
        assert_eq!(back[0].get_text("note").unwrap(), "hello world");
    }

    #[test]
    fn truncated_model_is_parse_error() {
        let mut a = ModelDoc::new("x");
        a.matrix("m", &[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let mut buf = Vec::new();
        write_docs(&[a], &mut buf).unwrap();
        let cut = &buf[..buf.len() - 8];
        assert!(matches!(read_docs(cut), Err(Error::Parse { .. })));
    }
}
