//! Regression learners for consumption patterns.
//!
//! Two learners share one tree representation ([`TreeModel`]):
//!
//! - [`ModelKind::RepTree`]: a regression tree grown by standard-deviation
//!   reduction and pruned against a seeded holdout (reduced-error pruning).
//!   Leaves predict the mean of their training targets. Used for the
//!   neighborhood model.
//! - [`ModelKind::ModelTree`]: an M5-style model tree. Leaves hold linear
//!   models over the numerically encoded attributes; the tree is pruned by
//!   comparing estimated errors and predictions can be smoothed along the
//!   root path. Used for the per-home models.
//!
//! A model's `trained_rmse` is its validation RMSE and serves as the
//! detection margin of the detectors built on top of it.

mod codec;
mod linear;
mod model_tree;
mod rep_tree;
mod split;

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Attribute, AttributeSet, Dataset, FeatureVector, Season};

pub use codec::{deserialize, serialize, MAGIC, VERSION};
pub use linear::{LinearModel, LINEAR_FEATURES};
pub use model_tree::{train_model_tree, ModelTreeParams, SMOOTHING_CONSTANT};
pub use rep_tree::{train_rep_tree, RepTreeParams};
pub use split::{best_split, population_sd, sd_reduction, SplitCandidate};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("validation set is empty")]
    EmptyValidationSet,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("children do not partition the parent multiset")]
    NotAPartition,
    #[error("model payload: {0}")]
    Decode(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Split criterion used by both learners.
pub const SPLIT_CRITERION: &str = "sd_reduction";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RepTree,
    ModelTree,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RepTree => "rep_tree",
            ModelKind::ModelTree => "model_tree",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rep_tree" | "reptree" => Ok(ModelKind::RepTree),
            "model_tree" | "m5" | "m5p" => Ok(ModelKind::ModelTree),
            other => Err(format!("unknown model kind '{other}'")),
        }
    }
}

/// Test applied at a split node. Rows satisfying it go left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTest {
    /// `code <= threshold`.
    AtMost(u8),
    /// Category subsets, as bit masks over category codes. Codes in neither
    /// mask were not seen at training time.
    InSet { left: u8, right: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub attribute: Attribute,
    pub test: SplitTest,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LeafModel {
    Constant(f64),
    Linear(LinearModel),
}

impl LeafModel {
    pub fn eval(&self, f: &FeatureVector, attributes: AttributeSet) -> f64 {
        match self {
            LeafModel::Constant(c) => *c,
            LeafModel::Linear(m) => m.eval(&linear::encode(f, attributes)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Training rows routed here.
    pub count: usize,
    pub model: LeafModel,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub rows: usize,
    /// Rows held out for reduced-error pruning (rep tree only).
    pub holdout_rows: usize,
    /// Least-squares fits that needed a collinear column dropped.
    pub singular_fits: usize,
    /// Wall-clock training time. Not part of the serialized payload.
    #[serde(skip)]
    pub train_seconds: f64,
    /// Holdout RMSE before pruning and after every prune step.
    #[serde(skip)]
    pub prune_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub kind: ModelKind,
    pub attributes: AttributeSet,
    /// Arena; node 0 is the root, children always follow their parent.
    pub nodes: Vec<Node>,
    pub smoothing: bool,
    /// Validation RMSE, the prediction error used as the detection margin.
    pub trained_rmse: f64,
    pub trained_mae: f64,
    pub meta: TrainingMeta,
}

/// Prediction with routing details.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub unclamped: f64,
    /// The row reached a category-subset split with a value unseen in
    /// training and was sent to the larger child.
    pub fallback_route: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mae: f64,
    pub rmse: f64,
}

impl TreeModel {
    pub fn leaf(kind: ModelKind, attributes: AttributeSet, value: f64, count: usize) -> Self {
        TreeModel {
            kind,
            attributes,
            nodes: vec![Node {
                count,
                model: LeafModel::Constant(value),
                split: None,
            }],
            smoothing: false,
            trained_rmse: 0.0,
            trained_mae: 0.0,
            meta: TrainingMeta::default(),
        }
    }

    fn route(&self, f: &FeatureVector, path: &mut Vec<usize>) -> bool {
        let mut fallback = false;
        let mut at = 0;
        path.clear();
        loop {
            path.push(at);
            let Some(split) = self.nodes[at].split else {
                return fallback;
            };
            let code = f.code(split.attribute);
            let go_left = match split.test {
                SplitTest::AtMost(t) => code <= t,
                SplitTest::InSet { left, right } => {
                    let bit = 1u8.checked_shl(u32::from(code)).unwrap_or(0);
                    if left & bit != 0 {
                        true
                    } else if right & bit != 0 {
                        false
                    } else {
                        fallback = true;
                        self.nodes[split.left].count >= self.nodes[split.right].count
                    }
                }
            };
            at = if go_left { split.left } else { split.right };
        }
    }

    pub fn predict_detailed(&self, f: &FeatureVector) -> Prediction {
        let mut path = Vec::with_capacity(16);
        let fallback_route = self.route(f, &mut path);
        let leaf = *path.last().expect("route visits the root");
        let mut value = self.nodes[leaf].model.eval(f, self.attributes);
        if self.smoothing && self.kind == ModelKind::ModelTree {
            for pair in path.windows(2).rev() {
                let (parent, child) = (&self.nodes[pair[0]], &self.nodes[pair[1]]);
                let n = child.count as f64;
                let q = parent.model.eval(f, self.attributes);
                value = (n * value + SMOOTHING_CONSTANT * q) / (n + SMOOTHING_CONSTANT);
            }
        }
        Prediction {
            value: value.max(0.0),
            unclamped: value,
            fallback_route,
        }
    }

    /// Predicted consumption in kWh, clamped at zero.
    pub fn predict(&self, f: &FeatureVector) -> f64 {
        self.predict_detailed(f).value
    }

    /// Index of the leaf a row lands in.
    pub fn leaf_index(&self, f: &FeatureVector) -> usize {
        let mut path = Vec::new();
        self.route(f, &mut path);
        *path.last().expect("non-empty path")
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn depth_of(nodes: &[Node], at: usize) -> usize {
            match nodes[at].split {
                None => 0,
                Some(s) => 1 + depth_of(nodes, s.left).max(depth_of(nodes, s.right)),
            }
        }
        depth_of(&self.nodes, 0)
    }

    /// Serialized payload size in bytes.
    pub fn model_bytes(&self) -> usize {
        serialize(self).len()
    }

    pub fn criterion(&self) -> &'static str {
        SPLIT_CRITERION
    }

    /// Evaluates on `valid` and stores the result as the model's prediction
    /// error.
    pub fn calibrate(&mut self, valid: &Dataset) -> Result<ErrorMetrics> {
        let m = evaluate(self, valid)?;
        self.trained_rmse = m.rmse;
        self.trained_mae = m.mae;
        Ok(m)
    }

    /// Indented, human-readable rendering of the tree.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} (criterion {}, rmse {:.6}, mae {:.6}, leaves {}, depth {})",
            self.kind.as_str(),
            SPLIT_CRITERION,
            self.trained_rmse,
            self.trained_mae,
            self.leaves(),
            self.depth()
        );
        self.write_node(&mut out, 0, 0);
        out
    }

    fn write_node(&self, out: &mut String, at: usize, depth: usize) {
        let node = &self.nodes[at];
        let indent = "|   ".repeat(depth);
        match node.split {
            None => {
                let _ = writeln!(out, "{indent}=> {} (n={})", describe_model(&node.model), node.count);
            }
            Some(s) => {
                let (l, r) = describe_test(s.attribute, s.test);
                let _ = writeln!(out, "{indent}{} {l}", s.attribute.name());
                self.write_node(out, s.left, depth + 1);
                let _ = writeln!(out, "{indent}{} {r}", s.attribute.name());
                self.write_node(out, s.right, depth + 1);
            }
        }
    }
}

fn describe_test(attribute: Attribute, test: SplitTest) -> (String, String) {
    match test {
        SplitTest::AtMost(t) => (format!("<= {t}"), format!("> {t}")),
        SplitTest::InSet { left, right } => {
            let names = |mask: u8| -> String {
                (0..8u8)
                    .filter(|c| mask & (1 << c) != 0)
                    .map(|c| match attribute {
                        Attribute::Season => Season::from_code(c).map(|s| s.as_str().to_string()),
                        _ => Some(c.to_string()),
                    })
                    .map(|s| s.unwrap_or_else(|| "?".into()))
                    .collect::<Vec<_>>()
                    .join(",")
            };
            (format!("in {{{}}}", names(left)), format!("in {{{}}}", names(right)))
        }
    }
}

fn describe_model(m: &LeafModel) -> String {
    match m {
        LeafModel::Constant(c) => format!("{c:.6}"),
        LeafModel::Linear(lm) => lm.describe(),
    }
}

/// Mean absolute error and root-mean-square error of `m` on `valid`.
pub fn evaluate(m: &TreeModel, valid: &Dataset) -> Result<ErrorMetrics> {
    if valid.is_empty() {
        return Err(ModelError::EmptyValidationSet);
    }
    let residuals: Vec<f64> = valid
        .rows
        .iter()
        .map(|r| r.consumption - m.predict(r))
        .collect();
    Ok(error_metrics(&residuals))
}

pub fn error_metrics(residuals: &[f64]) -> ErrorMetrics {
    let n = residuals.len().max(1) as f64;
    ErrorMetrics {
        mae: residuals.iter().map(|e| e.abs()).sum::<f64>() / n,
        rmse: (residuals.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
    }
}

/// Learner choice plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    RepTree(RepTreeParams),
    ModelTree(ModelTreeParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::RepTree(_) => ModelKind::RepTree,
            ModelParams::ModelTree(_) => ModelKind::ModelTree,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            ModelParams::RepTree(p) => ModelParams::RepTree(RepTreeParams { seed, ..*p }),
            ModelParams::ModelTree(p) => ModelParams::ModelTree(ModelTreeParams { seed, ..*p }),
        }
    }
}

pub fn train(train_set: &Dataset, params: &ModelParams) -> Result<TreeModel> {
    match params {
        ModelParams::RepTree(p) => train_rep_tree(train_set, p),
        ModelParams::ModelTree(p) => train_model_tree(train_set, p),
    }
}

/// Trains on `train_set` and calibrates the prediction error on `valid`.
pub fn train_and_validate(train_set: &Dataset, valid: &Dataset, params: &ModelParams) -> Result<TreeModel> {
    let started = Instant::now();
    let mut model = train(train_set, params)?;
    model.meta.train_seconds = started.elapsed().as_secs_f64();
    model.calibrate(valid)?;
    Ok(model)
}

/// Rebuilds the arena keeping only nodes reachable from the root, in
/// pre-order.
pub(crate) fn compact(nodes: &[Node]) -> Vec<Node> {
    fn visit(nodes: &[Node], at: usize, out: &mut Vec<Node>) -> usize {
        let idx = out.len();
        out.push(Node {
            split: None,
            ..nodes[at].clone()
        });
        if let Some(s) = nodes[at].split {
            let left = visit(nodes, s.left, out);
            let right = visit(nodes, s.right, out);
            out[idx].split = Some(Split { left, right, ..s });
        }
        idx
    }
    let mut out = Vec::with_capacity(nodes.len());
    if !nodes.is_empty() {
        visit(nodes, 0, &mut out);
    }
    out
}
