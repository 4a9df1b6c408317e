//! Residual-threshold detectors and decision fusion.
//!
//! A home-level detector flags an hour when the observed consumption exceeds
//! the model prediction by more than the model's prediction error (pe), and
//! raises an anomaly once enough recent hours are flagged. The neighborhood
//! detector applies the same test to half-hourly totals and raises a NACR
//! (neighborhood abnormal consumption report) on the first exceedance. The
//! decision maker confirms an attack on a NACR or when a strict majority of
//! home detectors alert.

mod counter;
mod fusion;
mod slope;

use std::io::Write;
use std::sync::Arc;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{split_train_validation, Dataset, FeatureVector, IngestError, Interval, Level};
use crate::models::{train_and_validate, ModelError, ModelParams, TreeModel};

pub use counter::{CounterMode, FlagWindow};
pub use fusion::{decide, DecisionMaker};
pub use slope::{gradual_overload_check, ols_slope, SlopeReport, SlopeThreshold};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("out-of-order observation: {got} does not follow {previous}")]
    Sequencing { previous: String, got: String },
    #[error("observation at {0} has the wrong interval kind for this detector")]
    WrongLevel(String),
    #[error("need at least {needed} days of totals, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("retraining failed: {0}")]
    Retrain(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DetectError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorParams {
    pub nbr_incr: usize,
    pub n_window: usize,
    pub counter_mode: CounterMode,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            nbr_incr: 2,
            n_window: 4,
            counter_mode: CounterMode::Window,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertKind {
    ShAnomaly,
    Nacr,
    AttackConfirmed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    pub kind: AlertKind,
    pub level: Level,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meter_id: Option<u32>,
    /// Start of the interval, ISO-8601.
    pub timestamp: NaiveDateTime,
    /// Hour (1..=24) or slot (1..=48) index.
    pub interval: u8,
    pub observed: f64,
    pub predicted: f64,
    pub threshold: f64,
    /// Number of alerting homes behind a confirmation.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub nb_alert: Option<usize>,
}

pub fn interval_start(date: NaiveDate, interval: Interval) -> NaiveDateTime {
    let minutes = interval.start_minute();
    date.and_time(NaiveTime::from_hms_opt(minutes / 60, minutes % 60, 0).expect("valid interval start"))
}

/// One line of JSON per event.
pub fn write_alerts_jsonl<'a, W: Write>(mut w: W, events: impl IntoIterator<Item = &'a AlertEvent>) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// What one observation did to a detector.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub predicted: f64,
    pub threshold: f64,
    /// observed > predicted + threshold
    pub flagged: bool,
    pub alert: Option<AlertEvent>,
}

/// A model paired with the pe derived from it; swapped as one unit.
#[derive(Debug, Clone)]
pub struct ModelHandle {
    pub model: Arc<TreeModel>,
    pub pe: f64,
}

impl ModelHandle {
    pub fn new(model: TreeModel) -> Self {
        let pe = model.trained_rmse;
        ModelHandle {
            model: Arc::new(model),
            pe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Position(NaiveDate, u8);

fn advance(last: &mut Option<Position>, f: &FeatureVector) -> Result<()> {
    let now = Position(f.date, f.interval.index());
    if let Some(prev) = *last {
        if now <= prev {
            return Err(DetectError::Sequencing {
                previous: format!("{} #{}", prev.0, prev.1),
                got: format!("{} #{}", now.0, now.1),
            });
        }
    }
    *last = Some(now);
    Ok(())
}

/// Home-level detector for one meter.
#[derive(Debug, Clone)]
pub struct ShDetector {
    pub meter_id: u32,
    handle: ModelHandle,
    window: FlagWindow,
    /// Rows judged benign, awaiting the next retrain.
    pub benign_buffer: Vec<FeatureVector>,
    /// Alert-triggering rows forwarded to the concentrator.
    pub suspects: Vec<FeatureVector>,
    /// Data the current model was trained on.
    pub history: Vec<FeatureVector>,
    last: Option<Position>,
}

impl ShDetector {
    pub fn new(meter_id: u32, model: TreeModel, params: DetectorParams) -> Self {
        ShDetector {
            meter_id,
            handle: ModelHandle::new(model),
            window: FlagWindow::new(params),
            benign_buffer: Vec::new(),
            suspects: Vec::new(),
            history: Vec::new(),
            last: None,
        }
    }

    pub fn with_history(mut self, history: Vec<FeatureVector>) -> Self {
        self.history = history;
        self
    }

    pub fn pe(&self) -> f64 {
        self.handle.pe
    }

    pub fn model(&self) -> &Arc<TreeModel> {
        &self.handle.model
    }

    pub fn window(&self) -> &FlagWindow {
        &self.window
    }

    /// Processes the next hour. The prediction comes from the model.
    pub fn step(&mut self, f: &FeatureVector) -> Result<StepOutcome> {
        let predicted = self.handle.model.predict(f);
        self.step_with_prediction(f, predicted)
    }

    /// Processes the next hour against a supplied prediction.
    pub fn step_with_prediction(&mut self, f: &FeatureVector, predicted: f64) -> Result<StepOutcome> {
        if !matches!(f.interval, Interval::Hour(_)) {
            return Err(DetectError::WrongLevel(f.date.to_string()));
        }
        advance(&mut self.last, f)?;
        let threshold = self.handle.pe;
        let flagged = f.consumption > predicted + threshold;
        let alerting = self.window.push(flagged);
        let alert = if alerting {
            self.suspects.push(*f);
            Some(AlertEvent {
                kind: AlertKind::ShAnomaly,
                level: Level::Sh,
                meter_id: Some(self.meter_id),
                timestamp: interval_start(f.date, f.interval),
                interval: f.interval.index(),
                observed: f.consumption,
                predicted,
                threshold,
                nb_alert: None,
            })
        } else {
            self.benign_buffer.push(*f);
            None
        };
        Ok(StepOutcome {
            predicted,
            threshold,
            flagged,
            alert,
        })
    }

    /// Retrains once the benign buffer holds `min_rows` rows. See
    /// [`retrain`].
    pub fn retrain_tick(&mut self, min_rows: usize, params: &ModelParams, seed: u64) -> Result<Option<Arc<TreeModel>>> {
        let template = Dataset::new(Level::Sh, Some(self.meter_id), self.handle.model.attributes);
        retrain(&template, &mut self.history, &mut self.benign_buffer, &mut self.handle, min_rows, params, seed)
    }
}

/// Neighborhood-level detector over half-hourly totals.
#[derive(Debug, Clone)]
pub struct NbhDetector {
    handle: ModelHandle,
    pub benign_buffer: Vec<FeatureVector>,
    pub suspect_store: Vec<FeatureVector>,
    pub history: Vec<FeatureVector>,
    last: Option<Position>,
}

impl NbhDetector {
    pub fn new(model: TreeModel) -> Self {
        NbhDetector {
            handle: ModelHandle::new(model),
            benign_buffer: Vec::new(),
            suspect_store: Vec::new(),
            history: Vec::new(),
            last: None,
        }
    }

    pub fn with_history(mut self, history: Vec<FeatureVector>) -> Self {
        self.history = history;
        self
    }

    pub fn pe(&self) -> f64 {
        self.handle.pe
    }

    pub fn model(&self) -> &Arc<TreeModel> {
        &self.handle.model
    }

    pub fn step(&mut self, f: &FeatureVector) -> Result<StepOutcome> {
        let predicted = self.handle.model.predict(f);
        self.step_with_prediction(f, predicted)
    }

    pub fn step_with_prediction(&mut self, f: &FeatureVector, predicted: f64) -> Result<StepOutcome> {
        if !matches!(f.interval, Interval::Slot(_)) {
            return Err(DetectError::WrongLevel(f.date.to_string()));
        }
        advance(&mut self.last, f)?;
        let threshold = self.handle.pe;
        let flagged = f.consumption > predicted + threshold;
        let alert = if flagged {
            self.suspect_store.push(*f);
            Some(AlertEvent {
                kind: AlertKind::Nacr,
                level: Level::Nbh,
                meter_id: None,
                timestamp: interval_start(f.date, f.interval),
                interval: f.interval.index(),
                observed: f.consumption,
                predicted,
                threshold,
                nb_alert: None,
            })
        } else {
            self.benign_buffer.push(*f);
            None
        };
        Ok(StepOutcome {
            predicted,
            threshold,
            flagged,
            alert,
        })
    }

    pub fn retrain_tick(&mut self, min_rows: usize, params: &ModelParams, seed: u64) -> Result<Option<Arc<TreeModel>>> {
        let template = Dataset::new(Level::Nbh, None, self.handle.model.attributes);
        retrain(&template, &mut self.history, &mut self.benign_buffer, &mut self.handle, min_rows, params, seed)
    }
}

pub fn sh_step(state: &mut ShDetector, f: &FeatureVector) -> Result<Option<AlertEvent>> {
    Ok(state.step(f)?.alert)
}

pub fn nbh_step(state: &mut NbhDetector, f: &FeatureVector) -> Result<Option<AlertEvent>> {
    Ok(state.step(f)?.alert)
}

/// Four weeks of intervals at `level`.
pub fn default_retrain_rows(level: Level) -> usize {
    28 * usize::from(level.intervals_per_day())
}

/// Merges the benign buffer into the training history, retrains with a
/// fresh week-block split and swaps in the new model and its pe. Below
/// `min_rows` buffered rows nothing happens. On failure the old model and
/// the buffer are kept.
fn retrain(
    template: &Dataset,
    history: &mut Vec<FeatureVector>,
    buffer: &mut Vec<FeatureVector>,
    handle: &mut ModelHandle,
    min_rows: usize,
    params: &ModelParams,
    seed: u64,
) -> Result<Option<Arc<TreeModel>>> {
    if buffer.len() < min_rows {
        return Ok(None);
    }
    let mut merged = template.with_rows(history.iter().chain(buffer.iter()).copied().collect());
    merged.normalize();
    let (train, valid) = split_train_validation(&merged, seed).map_err(|e: IngestError| DetectError::Retrain(e.to_string()))?;
    let model = train_and_validate(&train, &valid, params).map_err(|e: ModelError| DetectError::Retrain(e.to_string()))?;
    *handle = ModelHandle::new(model);
    *history = merged.rows;
    buffer.clear();
    Ok(Some(Arc::clone(&handle.model)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelKind;
    use crate::ingest::AttributeSet;

    fn constant_model(value: f64, pe: f64) -> TreeModel {
        let mut m = TreeModel::leaf(ModelKind::ModelTree, AttributeSet::sh_default(), value, 1);
        m.trained_rmse = pe;
        m
    }

    fn hour(h: u8, y: f64) -> FeatureVector {
        FeatureVector::new(NaiveDate::from_ymd_opt(2009, 7, 14).unwrap(), Interval::Hour(h), y)
    }

    fn slot(s: u8, y: f64) -> FeatureVector {
        FeatureVector::new(NaiveDate::from_ymd_opt(2009, 7, 14).unwrap(), Interval::Slot(s), y)
    }

    #[test]
    fn below_margin_is_benign() {
        let mut d = ShDetector::new(1, constant_model(0.5, 0.3), DetectorParams::default());
        let out = d.step(&hour(1, 0.7)).unwrap();
        assert!(!out.flagged && out.alert.is_none());
        assert_eq!(d.benign_buffer.len(), 1);
    }

    #[test]
    fn third_successive_exceedance_alerts() {
        let mut d = ShDetector::new(1, constant_model(0.5, 0.3), DetectorParams::default());
        let alerts: Vec<bool> = (1..=3).map(|h| d.step(&hour(h, 2.0)).unwrap().alert.is_some()).collect();
        assert_eq!(alerts, [false, false, true]);
        assert_eq!(d.suspects.len(), 1);
        assert_eq!(d.benign_buffer.len(), 2);
        assert_eq!(d.window().count(), 0);
    }

    #[test]
    fn gap_pattern_with_window_of_four() {
        // T, T, F, T: the window holds three flags when the last one lands.
        let pattern = [true, true, false, true];
        let run = |n_window| {
            let params = DetectorParams { n_window, ..Default::default() };
            let mut d = ShDetector::new(1, constant_model(0.5, 0.3), params);
            pattern
                .iter()
                .enumerate()
                .map(|(i, &hot)| d.step(&hour(i as u8 + 1, if hot { 2.0 } else { 0.5 })).unwrap().alert.is_some())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(4), [false, false, false, true]);
        assert_eq!(run(3), [false, false, false, false]);
    }

    #[test]
    fn out_of_order_is_rejected() {
        let mut d = ShDetector::new(1, constant_model(0.5, 0.3), DetectorParams::default());
        d.step(&hour(5, 0.5)).unwrap();
        assert!(matches!(d.step(&hour(5, 0.5)), Err(DetectError::Sequencing { .. })));
        assert!(matches!(d.step(&hour(4, 0.5)), Err(DetectError::Sequencing { .. })));
        assert!(matches!(d.step(&slot(20, 0.5)), Err(DetectError::WrongLevel(_))));
    }

    #[test]
    fn nbh_examples() {
        let mut n = NbhDetector::new(constant_model(240.0, 48.0));
        let a = n.step(&slot(1, 300.0)).unwrap().alert.unwrap();
        assert_eq!(a.kind, AlertKind::Nacr);
        assert!(a.observed > a.predicted + a.threshold);
        assert!(n.step(&slot(2, 288.0)).unwrap().alert.is_none());
        assert!(n.step(&slot(3, 100.0)).unwrap().alert.is_none());
        assert_eq!(n.benign_buffer.len(), 2);
        assert_eq!(n.suspect_store.len(), 1);
    }

    #[test]
    fn alert_json_has_iso_timestamp() {
        let mut d = ShDetector::new(7, constant_model(0.0, 0.1), DetectorParams { nbr_incr: 0, ..Default::default() });
        let a = d.step(&hour(18, 1.0)).unwrap().alert.unwrap();
        let mut buf = Vec::new();
        write_alerts_jsonl(&mut buf, [&a]).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"timestamp\":\"2009-07-14T17:00:00\""), "{line}");
        assert!(line.contains("\"kind\":\"sh_anomaly\""));
        assert!(line.ends_with('\n'));
        let back: AlertEvent = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(back, a);
    }
}
