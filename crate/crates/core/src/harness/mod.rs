//! Synthetic neighborhoods, end-to-end scenario replay and scoring.
//!
//! A scenario generates raw readings, runs them through ingest, trains one
//! model-tree per home and a rep-tree for the neighborhood, injects each
//! attack type into the validation weeks and replays every stream through
//! the detectors. Intervals are scored against their attack labels.

mod bench;
mod metrics;
mod scenario;
mod synth;

use std::fmt::Display;

use thiserror::Error;

pub use bench::{benchmark_models, write_benchmark_csv, BenchmarkRow, BENCHMARK_HEADER};
pub use metrics::{compute_metrics, roc_curve, Confusion, Metrics, Rates, RocCurve};
pub use scenario::{
    run_scenario, write_detection_csv, write_roc_csv, AttackScore, DataSummary, EvaluationReport, LevelReport,
    ModelSummary, ScenarioAlert, ScenarioConfig, ScenarioOutcome, VariantScore, DETECTION_HEADER,
};
pub use synth::{meter_ids, synth_generate, write_raw, SynthProfile};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("{predictions} predictions for {truth} labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("ROC needs both classes in the truth labels")]
    SingleClass,
    #[error("{stage} stage failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn stage(stage: &'static str, e: impl Display) -> Self {
        HarnessError::Stage {
            stage,
            message: e.to_string(),
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
