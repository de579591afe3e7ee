//! Isolation forest. Novelty is the anomaly score `2^(−E[h]/c(ψ))`.

use rand::seq::index::sample;
use rand::Rng;

use crate::persist::ModelDoc;
use crate::util::{rng, row_width, Rng as SeededRng};
use crate::{Error, Result};

pub const DEFAULT_TREES: usize = 100;
pub const DEFAULT_SUBSAMPLE: usize = 256;

/// Average unsuccessful-search path length in a binary search tree of `n` nodes.
pub fn average_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (n - 1) as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        value: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsolationTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl IsolationTree {
    fn build(rows: &[&[f64]], max_depth: usize, rng: &mut SeededRng) -> Self {
        let mut tree = Self { nodes: Vec::new() };
        tree.grow(rows.to_vec(), 0, max_depth, rng);
        tree
    }

    fn grow(
        &mut self,
        rows: Vec<&[f64]>,
        depth: usize,
        max_depth: usize,
        rng: &mut SeededRng,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= max_depth || rows.len() <= 1 {
            return id;
        }
        let d = rows[0].len();
        let ranges: Vec<(usize, f64, f64)> = (0..d)
            .filter_map(|j| {
                let (lo, hi) = rows
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                        (lo.min(r[j]), hi.max(r[j]))
                    });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let mut value = rng.random_range(lo..hi);
        if value <= lo {
            value = 0.5 * (lo + hi);
        }
        let (l, r): (Vec<&[f64]>, Vec<&[f64]>) = rows.into_iter().partition(|x| x[feature] < value);
        let left = self.grow(l, depth + 1, max_depth, rng);
        let right = self.grow(r, depth + 1, max_depth, rng);
        self.nodes[id] = Node::Split {
            feature,
            value,
            left,
            right,
        };
        id
    }

    /// Depth of the leaf reached by `v` plus `c(leaf size)`.
    pub fn path_length(&self, v: &[f64]) -> f64 {
        let mut node = 0;
        let mut depth = 0.0;
        loop {
            match self.nodes[node] {
                Node::Split {
                    feature,
                    value,
                    left,
                    right,
                } => {
                    node = if v[feature] < value { left } else { right };
                    depth += 1.0;
                }
                Node::Leaf { size } => return depth + average_path_length(size),
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IForestModel {
    pub trees: Vec<IsolationTree>,
    pub subsample: usize,
    dim: usize,
}

impl IForestModel {
    pub fn fit(rows: &[Vec<f64>], trees: usize, subsample: usize, seed: u64) -> Result<Self> {
        let dim = row_width(rows)?;
        if rows.len() < 2 {
            return Err(Error::InsufficientData(
                "isolation forest needs at least 2 rows".into(),
            ));
        }
        if trees == 0 || subsample < 2 {
            return Err(Error::invalid(
                "isolation forest needs trees >= 1 and subsample >= 2",
            ));
        }
        let psi = subsample.min(rows.len());
        let max_depth = (psi as f64).log2().ceil() as usize;
        let mut rng = rng(seed);
        let trees = (0..trees)
            .map(|_| {
                let idx = sample(&mut rng, rows.len(), psi);
                let sub: Vec<&[f64]> = idx.iter().map(|i| rows[i].as_slice()).collect();
                IsolationTree::build(&sub, max_depth, &mut rng)
            })
            .collect();
        Ok(Self {
            trees,
            subsample: psi,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean_path_length(&self, v: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(v)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn score(&self, v: &[f64]) -> f64 {
        2f64.powf(-self.mean_path_length(v) / average_path_length(self.subsample))
    }

    pub fn to_doc(&self) -> ModelDoc {
        let mut doc = ModelDoc::new("iforest");
        doc.scalar("subsample", self.subsample as f64)
            .scalar("dim", self.dim as f64)
            .scalar("trees", self.trees.len() as f64);
        for (i, t) in self.trees.iter().enumerate() {
            // one row per node: feature (−1 for leaves), value, left, right, size
            let data = t
                .nodes
                .iter()
                .flat_map(|n| match *n {
                    Node::Split {
                        feature,
                        value,
                        left,
                        right,
                    } => [feature as f64, value, left as f64, right as f64, 0.0],
                    Node::Leaf { size } => [-1.0, 0.0, 0.0, 0.0, size as f64],
                })
                .collect();
            doc.block(&format!("tree{i}"), t.nodes.len(), 5, data);
        }
        doc
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self> {
        doc.expect_kind("iforest")?;
        let n_trees = doc.get_usize("trees")?;
        let dim = doc.get_usize("dim")?;
        let trees = (0..n_trees)
            .map(|i| {
                let (rows, cols, data) = doc.get_block(&format!("tree{i}"))?;
                if cols != 5 || rows == 0 {
                    return Err(Error::parse(0, format!("iforest tree{i}: bad shape")));
                }
                let nodes = data
                    .chunks(5)
                    .map(|c| {
                        if c[0] < 0.0 {
                            Ok(Node::Leaf {
                                size: c[4] as usize,
                            })
                        } else {
                            let (feature, left, right) =
                                (c[0] as usize, c[2] as usize, c[3] as usize);
                            if feature >= dim || left >= rows || right >= rows {
                                return Err(Error::parse(0, format!("iforest tree{i}: bad node")));
                            }
                            Ok(Node::Split {
                                feature,
                                value: c[1],
                                left,
                                right,
                            })
                        }
                    })
                    .collect::<Result<_>>()?;
                Ok(IsolationTree { nodes })
            })
            .collect::<Result<Vec<_>>>()?;
        if trees.is_empty() {
            return Err(Error::parse(0, "iforest model has no trees"));
        }
        Ok(Self {
            trees,
            subsample: doc.get_usize("subsample")?,
            dim,
        })
    }
}
