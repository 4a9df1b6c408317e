use serde::{Deserialize, Serialize};

use crate::ingest::{Dataset, FeatureVector};

use super::linear::{encode, Fit, Gram, LINEAR_FEATURES};
use super::split::{best_split, population_sd, MIN_GAIN};
use super::{compact, LeafModel, ModelError, ModelKind, Node, Result, Split, TrainingMeta, TreeModel};

/// Weight of the parent model when smoothing along the root path.
pub const SMOOTHING_CONSTANT: f64 = 15.0;

/// Nodes whose target SD falls below this share of the root SD stop growing.
const SD_STOP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelTreeParams {
    pub min_instances: usize,
    pub smoothing: bool,
    /// Accepted for interface symmetry; induction is deterministic.
    pub seed: u64,
}

impl Default for ModelTreeParams {
    fn default() -> Self {
        ModelTreeParams {
            min_instances: 10,
            smoothing: true,
            seed: 1,
        }
    }
}

struct Grower<'a> {
    rows: &'a [FeatureVector],
    xs: Vec<[f64; LINEAR_FEATURES]>,
    data: &'a Dataset,
    min: usize,
    sd_floor: f64,
    /// Estimated-error differences below this count as ties.
    tolerance: f64,
    nodes: Vec<Node>,
    fits: Vec<Fit>,
}

impl Grower<'_> {
    fn fit(&self, idx: &[usize]) -> Fit {
        let xs: Vec<[f64; LINEAR_FEATURES]> = idx.iter().map(|&i| self.xs[i]).collect();
        let ys: Vec<f64> = idx.iter().map(|&i| self.rows[i].consumption).collect();
        Gram::new(&xs, &ys).fit_pruned()
    }

    fn grow(&mut self, idx: Vec<usize>) -> usize {
        let at = self.nodes.len();
        let fit = self.fit(&idx);
        self.nodes.push(Node {
            count: idx.len(),
            model: LeafModel::Linear(fit.model),
            split: None,
        });
        self.fits.push(fit);
        if idx.len() < 2 * self.min {
            return at;
        }
        let ys: Vec<f64> = idx.iter().map(|&i| self.rows[i].consumption).collect();
        if population_sd(&ys) < self.sd_floor {
            return at;
        }
        let Some(best) = best_split(self.rows, &idx, self.data.attributes, self.min) else {
            return at;
        };
        if best.gain <= MIN_GAIN {
            return at;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| best.goes_left(&self.rows[i]));
        let left = self.grow(l);
        let right = self.grow(r);
        self.nodes[at].split = Some(Split {
            attribute: best.attribute,
            test: best.test,
            left,
            right,
        });
        at
    }

    /// Collapses a subtree into its node model when the model's estimated
    /// error is no worse than the subtree's. Returns the kept estimate.
    fn prune(&mut self, at: usize) -> f64 {
        let own = self.fits[at].estimated_error(self.nodes[at].count);
        let Some(split) = self.nodes[at].split else {
            return own;
        };
        let el = self.prune(split.left);
        let er = self.prune(split.right);
        let (nl, nr) = (self.nodes[split.left].count as f64, self.nodes[split.right].count as f64);
        let subtree = (nl * el + nr * er) / (nl + nr);
        if own <= subtree + self.tolerance {
            self.nodes[at].split = None;
            own
        } else {
            subtree
        }
    }
}

/// M5-style model tree: SD-reduction splits, linear models at every node,
/// bottom-up pruning on estimated error and optional smoothing.
pub fn train_model_tree(train: &Dataset, params: &ModelTreeParams) -> Result<TreeModel> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if params.min_instances < 1 {
        return Err(ModelError::InvalidParams("min_instances must be at least 1".into()));
    }
    let rows = &train.rows;
    let root_sd = population_sd(&train.targets());
    let mut g = Grower {
        rows,
        xs: rows.iter().map(|r| encode(r, train.attributes)).collect(),
        data: train,
        min: params.min_instances,
        sd_floor: SD_STOP_FRACTION * root_sd,
        tolerance: 1e-9 * root_sd,
        nodes: Vec::new(),
        fits: Vec::new(),
    };
    g.grow((0..rows.len()).collect());
    g.prune(0);

    let nodes = compact(&g.nodes);
    // Count singular fits among the models the pruned tree still uses.
    let mut singular_fits = 0;
    let mut stack = vec![0usize];
    while let Some(at) = stack.pop() {
        if g.fits[at].singular {
            singular_fits += 1;
        }
        if let Some(s) = g.nodes[at].split {
            stack.push(s.left);
            stack.push(s.right);
        }
    }

    let mut model = TreeModel {
        nodes,
        smoothing: params.smoothing,
        ..TreeModel::leaf(ModelKind::ModelTree, train.attributes, 0.0, 0)
    };
    model.meta = TrainingMeta {
        rows: rows.len(),
        holdout_rows: 0,
        singular_fits,
        train_seconds: 0.0,
        prune_trace: Vec::new(),
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AttributeSet, Interval, Level};
    use chrono::{Days, NaiveDate};

    fn week(f: impl Fn(NaiveDate, u8) -> f64) -> Dataset {
        let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap();
        let mut d = Dataset::new(Level::Sh, Some(3), AttributeSet::sh_default());
        for day in 0..14 {
            let date = start + Days::new(day);
            for h in 1..=24 {
                d.rows.push(FeatureVector::new(date, Interval::Hour(h), f(date, h)));
            }
        }
        d
    }

    #[test]
    fn linear_in_hour_is_single_leaf() {
        let d = week(|_, h| 0.1 + 0.02 * f64::from(h));
        let m = train_model_tree(&d, &ModelTreeParams::default()).unwrap();
        assert_eq!(m.nodes.len(), 1);
        for r in &d.rows {
            assert!((m.predict(r) - r.consumption).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_target_single_leaf() {
        let d = week(|_, _| 0.7);
        let m = train_model_tree(&d, &ModelTreeParams::default()).unwrap();
        assert_eq!(m.nodes.len(), 1);
        assert!((m.predict(&d.rows[5]) - 0.7).abs() < 1e-12);
    }
}
