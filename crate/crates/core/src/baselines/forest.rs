use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FlatFeatures, FLAT_WIDTH};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfrConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Features tried at each split; features constant within the node are
    /// skipped and do not count.
    pub mtry: usize,
    pub bootstrap: bool,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for RfrConfig {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: None,
            min_leaf: 2,
            mtry: 3,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        n: usize,
        /// Sum of squared deviations of the node's targets from `value`.
        sse: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n: usize,
        sse: f64,
    },
}

impl Node {
    pub fn sse(&self) -> f64 {
        match *self {
            Node::Leaf { sse, .. } | Node::Split { sse, .. } => sse,
        }
    }
}

/// CART regression tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &FlatFeatures) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x.0[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn leaf_sse(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .map(Node::sse)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub tree_seeds: Vec<u64>,
    pub config: RfrConfig,
}

impl ForestModel {
    pub fn tree_predictions(&self, x: &FlatFeatures) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    /// Mean of the tree outputs.
    pub fn predict(&self, x: &FlatFeatures) -> f64 {
        self.tree_predictions(x).iter().sum::<f64>() / self.trees.len() as f64
    }
}

pub fn train_rfr(data: &[(FlatFeatures, f64)], config: &RfrConfig) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::Input("random forest needs training data".into()));
    }
    if config.n_trees == 0 || config.min_leaf == 0 || config.mtry == 0 {
        return Err(Error::Config(
            "random forest needs n_trees, min_leaf and mtry of at least 1".into(),
        ));
    }
    if data
        .iter()
        .any(|(x, y)| !y.is_finite() || x.0.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::Input(
            "random forest data contains non-finite values".into(),
        ));
    }
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let tree_seeds: Vec<u64> = (0..config.n_trees).map(|_| master.next_u64()).collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&s| grow_tree(data, config, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect();
    Ok(ForestModel {
        trees,
        tree_seeds,
        config: config.clone(),
    })
}

fn grow_tree(data: &[(FlatFeatures, f64)], config: &RfrConfig, rng: &mut ChaCha8Rng) -> Tree {
    let n = data.len();
    let sample: Vec<usize> = if config.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut tree = Tree { nodes: Vec::new() };
    build(data, config, rng, &mut tree, sample, 0);
    tree
}

fn mean_sse(data: &[(FlatFeatures, f64)], idx: &[usize]) -> (f64, f64) {
    let mean = idx.iter().map(|&i| data[i].1).sum::<f64>() / idx.len() as f64;
    let sse = idx.iter().map(|&i| (data[i].1 - mean).powi(2)).sum();
    (mean, sse)
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    sse: f64,
}

/// Lowest combined child SSE over the candidate features, respecting
/// `min_leaf` on both sides.
fn best_split(
    data: &[(FlatFeatures, f64)],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit> {
    let n = idx.len();
    let mut best: Option<BestSplit> = None;
    let mut sorted = idx.to_vec();
    for &f in features {
        sorted.sort_by(|&a, &b| data[a].0 .0[f].total_cmp(&data[b].0 .0[f]));
        let total: f64 = sorted.iter().map(|&i| data[i].1).sum();
        let total_sq: f64 = sorted.iter().map(|&i| data[i].1 * data[i].1).sum();
        let (mut s, mut sq) = (0.0, 0.0);
        for k in 0..n - 1 {
            let y = data[sorted[k]].1;
            s += y;
            sq += y * y;
            let left = k + 1;
            let right = n - left;
            let (xa, xb) = (data[sorted[k]].0 .0[f], data[sorted[k + 1]].0 .0[f]);
            if left < min_leaf || right < min_leaf || xa == xb {
                continue;
            }
            let sse_l = sq - s * s / left as f64;
            let sse_r = (total_sq - sq) - (total - s).powi(2) / right as f64;
            let sse = sse_l.max(0.0) + sse_r.max(0.0);
            if best.as_ref().is_none_or(|b| sse < b.sse) {
                best = Some(BestSplit {
                    feature: f,
                    threshold: 0.5 * (xa + xb),
                    sse,
                });
            }
        }
    }
    best
}

fn build(
    data: &[(FlatFeatures, f64)],
    config: &RfrConfig,
    rng: &mut ChaCha8Rng,
    tree: &mut Tree,
    idx: Vec<usize>,
    depth: usize,
) -> usize {
    let (mean, sse) = mean_sse(data, &idx);
    let id = tree.nodes.len();
    tree.nodes.push(Node::Leaf {
        value: mean,
        n: idx.len(),
        sse,
    });
    let depth_ok = config.max_depth.is_none_or(|d| depth < d);
    if !depth_ok || idx.len() < 2 * config.min_leaf || sse <= 0.0 {
        return id;
    }
    // Features constant within the node do not count toward mtry.
    let features: Vec<usize> = index::sample(rng, FLAT_WIDTH, FLAT_WIDTH)
        .into_iter()
        .filter(|&f| {
            let first = data[idx[0]].0 .0[f];
            idx.iter().any(|&i| data[i].0 .0[f] != first)
        })
        .take(config.mtry)
        .collect();
    let Some(split) = best_split(data, &idx, &features, config.min_leaf) else {
        return id;
    };
    // Exact recomputation guards against prefix-sum rounding.
    let (l_idx, r_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| data[i].0 .0[split.feature] <= split.threshold);
    let child_sse = mean_sse(data, &l_idx).1 + mean_sse(data, &r_idx).1;
    if child_sse > sse {
        return id;
    }
    let left = build(data, config, rng, tree, l_idx, depth + 1);
    let right = build(data, config, rng, tree, r_idx, depth + 1);
    tree.nodes[id] = Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        left,
        right,
        n: idx.len(),
        sse,
    };
    id
}
