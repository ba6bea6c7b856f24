//! Random forest of CART regression trees on binary features.
//!
//! Each split tests one fingerprint bit (threshold 0.5): rows with the bit
//! clear go left, rows with it set go right. The chosen split maximizes the
//! reduction in the sum of squared deviations over all 128 features; equal
//! reductions go to the lowest feature index. A node becomes a leaf when
//! it is pure, has fewer than `min_samples_split` rows, reaches
//! `max_depth`, or no feature separates its rows.

use serde::{Deserialize, Serialize};

use crate::data::{Fingerprint, N_BITS};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until the leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
    /// Draw a bootstrap sample per tree; when false every tree sees the
    /// training rows as given.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: Some(10),
            min_samples_split: 2,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::domain("forest needs at least one tree"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::domain("forest max_depth must be positive"));
        }
        if self.min_samples_split < 2 {
            return Err(Error::domain(format!(
                "min_samples_split must be >= 2, got {}",
                self.min_samples_split
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        /// Bit clear.
        left: usize,
        /// Bit set.
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_fingerprint(&self, x: Fingerprint) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    left,
                    right,
                } => at = if x.bit(feature) { right } else { left },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    left,
                    right,
                } => at = if row[feature] > 0.5 { right } else { left },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_fingerprint(&self, x: Fingerprint) -> f64 {
        self.trees
            .iter()
            .map(|t| t.predict_fingerprint(x))
            .sum::<f64>()
            / self.trees.len() as f64
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit(params: &ForestParams, x: &[Fingerprint], y: &[f64]) -> ForestModel {
    let n = x.len();
    let trees = (0..params.n_trees)
        .map(|t| {
            let rows: Vec<usize> = if params.bootstrap {
                let mut r = rng::rng_from_seed(rng::combine(params.seed, t as u64));
                (0..n).map(|_| rng::index(&mut r, n)).collect()
            } else {
                (0..n).collect()
            };
            build_tree(params, x, y, rows)
        })
        .collect();
    ForestModel { trees }
}

struct Pending {
    slot: usize,
    rows: Vec<usize>,
    depth: usize,
}

fn build_tree(params: &ForestParams, x: &[Fingerprint], y: &[f64], rows: Vec<usize>) -> Tree {
    let max_depth = params.max_depth.unwrap_or(usize::MAX);
    let mut nodes = vec![Node::Leaf(0.0)];
    let mut stack = vec![Pending {
        slot: 0,
        rows,
        depth: 0,
    }];
    while let Some(Pending { slot, rows, depth }) = stack.pop() {
        let count = rows.len() as f64;
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / count;
        let sse: f64 = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();
        nodes[slot] = Node::Leaf(mean);
        if depth >= max_depth || rows.len() < params.min_samples_split || sse <= 0.0 {
            continue;
        }
        let Some(feature) = best_split(x, y, &rows) else {
            continue;
        };
        let (right_rows, left_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| x[r].bit(feature));
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf(0.0));
        nodes.push(Node::Leaf(0.0));
        nodes[slot] = Node::Split {
            feature,
            left,
            right,
        };
        stack.push(Pending {
            slot: right,
            rows: right_rows,
            depth: depth + 1,
        });
        stack.push(Pending {
            slot: left,
            rows: left_rows,
            depth: depth + 1,
        });
    }
    Tree { nodes }
}

/// Feature with the largest squared-deviation reduction among features that
/// separate the rows.
fn best_split(x: &[Fingerprint], y: &[f64], rows: &[usize]) -> Option<usize> {
    let mut ones = [0usize; N_BITS];
    let mut sums = [0.0f64; N_BITS];
    let mut total = 0.0;
    for &r in rows {
        let target = y[r];
        total += target;
        let mut bits = x[r].as_u128();
        while bits != 0 {
            let j = bits.leading_zeros() as usize;
            ones[j] += 1;
            sums[j] += target;
            bits &= !(1u128 << (N_BITS - 1 - j));
        }
    }
    let n = rows.len();
    let parent = total * total / n as f64;
    let mut best: Option<(usize, f64)> = None;
    for j in 0..N_BITS {
        let n1 = ones[j];
        if n1 == 0 || n1 == n {
            continue;
        }
        let n0 = n - n1;
        let s1 = sums[j];
        let s0 = total - s1;
        let gain = s1 * s1 / n1 as f64 + s0 * s0 / n0 as f64 - parent;
        if best.is_none_or(|(_, g)| gain > g) {
            best = Some((j, gain));
        }
    }
    best.map(|(j, _)| j)
}
