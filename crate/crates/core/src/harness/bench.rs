use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::Dataset;
use crate::models::{train_and_validate, ModelKind, ModelParams, TreeModel};

use super::{HarnessError, Result};

pub const BENCHMARK_HEADER: [&str; 8] = [
    "meter_id",
    "kind",
    "mae",
    "rmse",
    "train_seconds",
    "model_bytes",
    "leaves",
    "depth",
];

/// One learner trained and validated on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub meter_id: Option<u32>,
    pub kind: ModelKind,
    pub mae: f64,
    pub rmse: f64,
    pub train_seconds: f64,
    pub model_bytes: usize,
    pub leaves: usize,
    pub depth: usize,
}

impl BenchmarkRow {
    pub fn from_model(meter_id: Option<u32>, m: &TreeModel) -> Self {
        BenchmarkRow {
            meter_id,
            kind: m.kind,
            mae: m.trained_mae,
            rmse: m.trained_rmse,
            train_seconds: m.meta.train_seconds,
            model_bytes: m.model_bytes(),
            leaves: m.leaves(),
            depth: m.depth(),
        }
    }
}

/// Trains every algorithm on every (train, validation) pair. Rows come out
/// grouped by dataset, algorithms in the given order.
pub fn benchmark_models(splits: &[(Dataset, Dataset)], algorithms: &[ModelParams]) -> Result<Vec<BenchmarkRow>> {
    if algorithms.is_empty() {
        return Ok(Vec::new());
    }
    let per_split: Vec<Result<Vec<BenchmarkRow>>> = splits
        .par_iter()
        .map(|(train, valid)| {
            algorithms
                .iter()
                .map(|p| {
                    let m = train_and_validate(train, valid, p)
                        .map_err(|e| HarnessError::stage("benchmark", e))?;
                    Ok(BenchmarkRow::from_model(train.meter_id, &m))
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_split {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_benchmark_csv<W: Write>(writer: W, rows: &[BenchmarkRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BENCHMARK_HEADER)?;
    for r in rows {
        w.write_record([
            r.meter_id.map(|m| m.to_string()).unwrap_or_default(),
            r.kind.as_str().to_string(),
            format!("{:.6}", r.mae),
            format!("{:.6}", r.rmse),
            format!("{:.6}", r.train_seconds),
            r.model_bytes.to_string(),
            r.leaves.to_string(),
            r.depth.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
