//! Random-forest regression: bootstrapped CART trees with variance-minimizing
//! splits over a random feature subset per split.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::tfidf::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn predict(&self, x: &SparseVec) -> f64 {
        match self {
            TreeNode::Leaf { value } => *value,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x.get(*feature) <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features considered per split; defaults to max(1, p/3).
    pub features_per_split: Option<usize>,
    /// Minimum node size eligible for splitting.
    pub min_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 100,
            features_per_split: None,
            min_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeNode>,
    pub params: ForestParams,
    pub dims: usize,
}

impl ForestModel {
    /// Mean of the per-tree predictions.
    pub fn predict(&self, x: &SparseVec) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Fit a forest. Per-tree seeds derive from the forest seed and the tree
/// index, so tree order never affects the result.
pub fn fit_forest(
    x: &[SparseVec],
    y: &[f64],
    dims: usize,
    params: &ForestParams,
) -> Result<ForestModel> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain(format!(
            "forest fit needs matching X/y with at least 2 rows, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if params.trees == 0 {
        return Err(Error::Domain("forest needs at least one tree".into()));
    }
    let k = params
        .features_per_split
        .unwrap_or_else(|| (dims / 3).max(1))
        .clamp(1, dims.max(1));
    let n = x.len();

    let trees = (0..params.trees)
        .map(|tree_idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                params
                    .seed
                    .wrapping_add((tree_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(x, y, rows, dims, k, params.min_split, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        trees,
        params: params.clone(),
        dims,
    })
}

fn mean_of(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64
}

fn grow(
    x: &[SparseVec],
    y: &[f64],
    rows: Vec<usize>,
    dims: usize,
    k: usize,
    min_split: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let first = y[rows[0]];
    let pure = rows.iter().all(|&r| y[r] == first);
    if rows.len() < min_split || pure {
        return TreeNode::Leaf {
            value: mean_of(y, &rows),
        };
    }

    let candidates = rand::seq::index::sample(rng, dims, k.min(dims));
    let mut best: Option<(f64, u32, f64)> = None; // (cost, feature, threshold)
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for feature in candidates {
        let feature = feature as u32;
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x[r].get(feature), y[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
        let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for i in 1..pairs.len() {
            left_sum += pairs[i - 1].1;
            left_sq += pairs[i - 1].1 * pairs[i - 1].1;
            if pairs[i - 1].0 == pairs[i].0 {
                continue;
            }
            let nl = i as f64;
            let nr = (pairs.len() - i) as f64;
            let sse_left = left_sq - left_sum * left_sum / nl;
            let right_sum = total_sum - left_sum;
            let sse_right = (total_sq - left_sq) - right_sum * right_sum / nr;
            let cost = sse_left + sse_right;
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, feature, 0.5 * (pairs[i - 1].0 + pairs[i].0)));
            }
        }
    }

    let Some((_, feature, threshold)) = best else {
        // every sampled feature is constant on this node
        return TreeNode::Leaf {
            value: mean_of(y, &rows),
        };
    };

    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| x[r].get(feature) <= threshold);
    TreeNode::Split {
        feature,
        threshold,
        left: Box::new(grow(x, y, left_rows, dims, k, min_split, rng)),
        right: Box::new(grow(x, y, right_rows, dims, k, min_split, rng)),
    }
}
