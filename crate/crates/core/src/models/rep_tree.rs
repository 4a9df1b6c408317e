use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, FeatureVector};

use super::split::{best_split, MIN_GAIN};
use super::{compact, LeafModel, ModelError, ModelKind, Node, Result, Split, TrainingMeta, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepTreeParams {
    pub min_instances: usize,
    pub prune_fraction: f64,
    pub seed: u64,
}

impl Default for RepTreeParams {
    fn default() -> Self {
        RepTreeParams {
            min_instances: 10,
            prune_fraction: 0.25,
            seed: 1,
        }
    }
}

fn mean_of(rows: &[FeatureVector], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| rows[i].consumption).sum::<f64>() / idx.len() as f64
}

fn grow(rows: &[FeatureVector], idx: Vec<usize>, d: &Dataset, min: usize, nodes: &mut Vec<Node>) -> usize {
    let at = nodes.len();
    nodes.push(Node {
        count: idx.len(),
        model: LeafModel::Constant(mean_of(rows, &idx)),
        split: None,
    });
    if idx.len() < 2 * min {
        return at;
    }
    let Some(best) = best_split(rows, &idx, d.attributes, min) else {
        return at;
    };
    if best.gain <= MIN_GAIN {
        return at;
    }
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| best.goes_left(&rows[i]));
    let left = grow(rows, l, d, min, nodes);
    let right = grow(rows, r, d, min, nodes);
    nodes[at].split = Some(Split {
        attribute: best.attribute,
        test: best.test,
        left,
        right,
    });
    at
}

/// Bottom-up reduced-error pruning. Returns the holdout SSE of the subtree
/// rooted at `at` after pruning.
fn prune(at: usize, nodes: &mut [Node], leaf_sse: &[f64], total: &mut f64, holdout: usize, trace: &mut Vec<f64>) -> f64 {
    let Some(split) = nodes[at].split else {
        return leaf_sse[at];
    };
    let subtree = prune(split.left, nodes, leaf_sse, total, holdout, trace)
        + prune(split.right, nodes, leaf_sse, total, holdout, trace);
    if leaf_sse[at] <= subtree {
        let before = trace.last().copied().unwrap_or(f64::INFINITY);
        nodes[at].split = None;
        *total += leaf_sse[at] - subtree;
        let rmse = (total.max(0.0) / holdout as f64).sqrt();
        debug_assert!(rmse <= before + 1e-12, "prune step raised holdout rmse: {before} -> {rmse}");
        trace.push(rmse);
        leaf_sse[at]
    } else {
        subtree
    }
}

/// Regression tree grown by SD reduction and pruned on a seeded holdout.
///
/// After pruning, every node's mean and count are refit on the full training
/// set, so each leaf predicts the mean of the training rows routed to it.
pub fn train_rep_tree(train: &Dataset, params: &RepTreeParams) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if params.min_instances < 1 {
        return Err(ModelError::InvalidParams("min_instances must be at least 1".into()));
    }
    if !(params.prune_fraction > 0.0 && params.prune_fraction < 1.0) {
        return Err(ModelError::InvalidParams("prune_fraction must lie in (0, 1)".into()));
    }
    let rows = &train.rows;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));
    let mut holdout_n = (rows.len() as f64 * params.prune_fraction).floor() as usize;
    if holdout_n >= rows.len() {
        holdout_n = 0;
    }
    let (hold, grow_idx) = order.split_at(holdout_n);
    let mut grow_idx = grow_idx.to_vec();
    grow_idx.sort_unstable();

    let mut nodes = Vec::new();
    grow(rows, grow_idx, train, params.min_instances, &mut nodes);

    let mut trace = Vec::new();
    if !hold.is_empty() {
        let mut leaf_sse = vec![0.0; nodes.len()];
        let mut total = 0.0;
        let probe = TreeModel {
            nodes: nodes.clone(),
            ..TreeModel::leaf(ModelKind::RepTree, train.attributes, 0.0, 0)
        };
        let mut path = Vec::new();
        for &i in hold {
            probe.route(&rows[i], &mut path);
            for &n in &path {
                let LeafModel::Constant(c) = nodes[n].model else { unreachable!() };
                let e = rows[i].consumption - c;
                leaf_sse[n] += e * e;
            }
            total += leaf_sse_last(&nodes, &path, &rows[i]);
        }
        trace.push((total / hold.len() as f64).sqrt());
        prune(0, &mut nodes, &leaf_sse, &mut total, hold.len(), &mut trace);
    }

    let mut model = TreeModel {
        nodes: compact(&nodes),
        ..TreeModel::leaf(ModelKind::RepTree, train.attributes, 0.0, 0)
    };
    backfit(&mut model, rows);
    model.meta = TrainingMeta {
        rows: rows.len(),
        holdout_rows: hold.len(),
        singular_fits: 0,
        train_seconds: 0.0,
        prune_trace: trace,
    };
    Ok(model)
}

fn leaf_sse_last(nodes: &[Node], path: &[usize], r: &FeatureVector) -> f64 {
    let leaf = *path.last().expect("non-empty path");
    let LeafModel::Constant(c) = nodes[leaf].model else { unreachable!() };
    (r.consumption - c).powi(2)
}

fn backfit(model: &mut TreeModel, rows: &[FeatureVector]) {
    let mut sums = vec![(0usize, 0.0f64); model.nodes.len()];
    let mut path = Vec::new();
    for r in rows {
        model.route(r, &mut path);
        for &n in &path {
            sums[n].0 += 1;
            sums[n].1 += r.consumption;
        }
    }
    for (node, (count, sum)) in model.nodes.iter_mut().zip(sums) {
        node.count = count;
        if count > 0 {
            node.model = LeafModel::Constant(sum / count as f64);
        }
    }
}
