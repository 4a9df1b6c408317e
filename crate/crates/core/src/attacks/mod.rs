//! Power overloading attack injection.
//!
//! Every attack multiplies the benign consumption of selected intervals by a
//! factor: `M(e) = e * factor`, with factor 1 wherever no attack applies.
//! Intervals where a factor was applied are labeled malicious, even when the
//! drawn factor happens to be below 1.
//!
//! | type | intervals                        | default factor |
//! |------|----------------------------------|----------------|
//! | T1   | peak windows                     | U(0.8, 4)      |
//! | T2   | one random window per day        | U(0.8, 4)      |
//! | T3   | peak windows                     | U(4, 8)        |
//! | T4   | alternating runs of `period`     | U(2, 4)        |
//!
//! Peak windows and T2 windows are expressed in clock hours 0..=23 and are
//! inclusive at both ends. Draws come from streams keyed by
//! (seed, type, meter, day, interval), so generation order never matters.

mod corpus;

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{epoch, FeatureVector, Interval, Level};
use crate::rng::keyed_rng;

pub use corpus::{generate_corpus, write_corpus_csv, AttackMix, Corpus, CorpusEntry, Variant, CORPUS_HEADER};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("invalid attack spec: {0}")]
    InvalidSpec(String),
    #[error("series is not day aligned: {0}")]
    NotDayAligned(String),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = AttackError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackType {
    #[serde(rename = "t1", alias = "T1_peak")]
    T1Peak,
    #[serde(rename = "t2", alias = "T2_bill_reduction")]
    T2BillReduction,
    #[serde(rename = "t3", alias = "T3_sharp")]
    T3Sharp,
    #[serde(rename = "t4", alias = "T4_fluctuation")]
    T4Fluctuation,
}

impl AttackType {
    pub const ALL: [AttackType; 4] = [
        AttackType::T1Peak,
        AttackType::T2BillReduction,
        AttackType::T3Sharp,
        AttackType::T4Fluctuation,
    ];

    pub fn code(self) -> u64 {
        match self {
            AttackType::T1Peak => 1,
            AttackType::T2BillReduction => 2,
            AttackType::T3Sharp => 3,
            AttackType::T4Fluctuation => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AttackType::T1Peak => "t1",
            AttackType::T2BillReduction => "t2",
            AttackType::T3Sharp => "t3",
            AttackType::T4Fluctuation => "t4",
        }
    }

    pub fn default_factor_range(self) -> FactorRange {
        match self {
            AttackType::T1Peak | AttackType::T2BillReduction => FactorRange::new(0.8, 4.0),
            AttackType::T3Sharp => FactorRange::new(4.0, 8.0),
            AttackType::T4Fluctuation => FactorRange::new(2.0, 4.0),
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttackType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t1" | "t1_peak" => Ok(AttackType::T1Peak),
            "t2" | "t2_bill_reduction" => Ok(AttackType::T2BillReduction),
            "t3" | "t3_sharp" => Ok(AttackType::T3Sharp),
            "t4" | "t4_fluctuation" => Ok(AttackType::T4Fluctuation),
            other => Err(format!("unknown attack type '{other}'")),
        }
    }
}

/// Closed range a factor is drawn uniformly from. `low == high` pins it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorRange {
    pub low: f64,
    pub high: f64,
}

impl FactorRange {
    pub const fn new(low: f64, high: f64) -> Self {
        FactorRange { low, high }
    }

    pub fn fixed(v: f64) -> Self {
        FactorRange { low: v, high: v }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.random_range(self.low..self.high)
        }
    }
}

/// Inclusive range of clock hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakWindow {
    pub start: u8,
    pub end: u8,
}

impl PeakWindow {
    pub fn contains(&self, clock_hour: u8) -> bool {
        (self.start..=self.end).contains(&clock_hour)
    }
}

pub fn default_peak_windows() -> Vec<PeakWindow> {
    vec![PeakWindow { start: 7, end: 9 }, PeakWindow { start: 19, end: 22 }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub attack_type: AttackType,
    pub factor_range: FactorRange,
    pub peak_windows: Vec<PeakWindow>,
    /// Shortest T2 window, hours.
    pub min_off_time: u8,
    /// T4 run length in intervals.
    pub period: u8,
    pub seed: u64,
}

impl AttackSpec {
    pub fn new(attack_type: AttackType, seed: u64) -> Self {
        AttackSpec {
            attack_type,
            factor_range: attack_type.default_factor_range(),
            peak_windows: default_peak_windows(),
            min_off_time: 4,
            period: 1,
            seed,
        }
    }

    pub fn with_factor(mut self, range: FactorRange) -> Self {
        self.factor_range = range;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.factor_range;
        if !(r.low > 0.0 && r.low <= r.high && r.high.is_finite()) {
            return Err(AttackError::InvalidSpec(format!("factor range [{}, {}]", r.low, r.high)));
        }
        if let Some(w) = self.peak_windows.iter().find(|w| w.start > w.end || w.end > 23) {
            return Err(AttackError::InvalidSpec(format!("peak window {}-{} outside 0..=23", w.start, w.end)));
        }
        if !(1..=23).contains(&self.min_off_time) {
            return Err(AttackError::InvalidSpec(format!("min_off_time {} outside 1..=23", self.min_off_time)));
        }
        if self.period == 0 {
            return Err(AttackError::InvalidSpec("period must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malicious => "malicious",
        }
    }

    pub fn is_malicious(self) -> bool {
        self == Label::Malicious
    }
}

/// A benign series, its attacked copy and per-interval labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub level: Level,
    pub meter_id: Option<u32>,
    pub base: Vec<FeatureVector>,
    pub attacked: Vec<f64>,
    pub labels: Vec<Label>,
    /// `None` for an untouched benign copy.
    pub spec: Option<AttackSpec>,
}

impl LabeledSeries {
    pub fn benign(level: Level, meter_id: Option<u32>, base: &[FeatureVector]) -> Self {
        LabeledSeries {
            level,
            meter_id,
            base: base.to_vec(),
            attacked: base.iter().map(|r| r.consumption).collect(),
            labels: vec![Label::Benign; base.len()],
            spec: None,
        }
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Attacked rows as feature vectors.
    pub fn attacked_rows(&self) -> impl Iterator<Item = FeatureVector> + '_ {
        self.base.iter().zip(&self.attacked).map(|(b, &a)| FeatureVector { consumption: a, ..*b })
    }

    pub fn malicious_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_malicious()).count()
    }
}

fn day_number(date: NaiveDate) -> u64 {
    (date - epoch()).num_days().max(0) as u64
}

fn meter_key(meter_id: Option<u32>) -> u64 {
    u64::from(meter_id.unwrap_or(0))
}

/// Factor drawn for one interval.
fn interval_factor(spec: &AttackSpec, meter_id: Option<u32>, r: &FeatureVector) -> f64 {
    let mut rng = keyed_rng(&[
        spec.seed,
        spec.attack_type.code(),
        meter_key(meter_id),
        day_number(r.date),
        u64::from(r.interval.index()),
    ]);
    spec.factor_range.draw(&mut rng)
}

/// The inclusive clock-hour window T2 attacks on `date`.
pub fn bill_reduction_window(spec: &AttackSpec, meter_id: Option<u32>, date: NaiveDate) -> PeakWindow {
    let mut rng = keyed_rng(&[
        spec.seed,
        spec.attack_type.code(),
        meter_key(meter_id),
        day_number(date),
        u64::MAX,
    ]);
    let m = spec.min_off_time;
    let start = rng.random_range(0..=23 - m);
    let duration = rng.random_range(m..=23);
    PeakWindow { start, end: (start + duration).min(23) }
}

fn check_alignment(level: Level, series: &[FeatureVector]) -> Result<()> {
    for (i, r) in series.iter().enumerate() {
        let ok = matches!((level, r.interval), (Level::Sh, Interval::Hour(_)) | (Level::Nbh, Interval::Slot(_)));
        if !ok || !r.interval.is_valid() {
            return Err(AttackError::NotDayAligned(format!("row {i} has interval {:?} at level {}", r.interval, level.as_str())));
        }
    }
    if let Some(i) = series.windows(2).position(|w| w[0].sort_key() >= w[1].sort_key()) {
        return Err(AttackError::NotDayAligned(format!("rows {} and {} are out of order", i, i + 1)));
    }
    Ok(())
}

/// Whether `spec` targets interval `r`.
pub fn is_targeted(spec: &AttackSpec, meter_id: Option<u32>, r: &FeatureVector) -> bool {
    let hour = r.interval.clock_hour();
    match spec.attack_type {
        AttackType::T1Peak | AttackType::T3Sharp => spec.peak_windows.iter().any(|w| w.contains(hour)),
        AttackType::T2BillReduction => bill_reduction_window(spec, meter_id, r.date).contains(hour),
        AttackType::T4Fluctuation => {
            let position = u32::from(r.interval.index() - 1);
            (position / u32::from(spec.period)) % 2 == 1
        }
    }
}

/// Applies `spec` to a chronologically ordered series of one level.
pub fn apply(level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    spec.validate()?;
    if series.is_empty() {
        log::warn!("attack {}: empty series, nothing to do", spec.attack_type);
    }
    check_alignment(level, series)?;
    let mut attacked = Vec::with_capacity(series.len());
    let mut labels = Vec::with_capacity(series.len());
    // T2 windows are drawn once per day.
    let mut windows: BTreeMap<NaiveDate, PeakWindow> = BTreeMap::new();
    for r in series {
        let targeted = match spec.attack_type {
            AttackType::T2BillReduction => windows
                .entry(r.date)
                .or_insert_with(|| bill_reduction_window(spec, meter_id, r.date))
                .contains(r.interval.clock_hour()),
            _ => is_targeted(spec, meter_id, r),
        };
        if targeted {
            attacked.push(r.consumption * interval_factor(spec, meter_id, r));
            labels.push(Label::Malicious);
        } else {
            attacked.push(r.consumption);
            labels.push(Label::Benign);
        }
    }
    Ok(LabeledSeries {
        level,
        meter_id,
        base: series.to_vec(),
        attacked,
        labels,
        spec: Some(spec.clone()),
    })
}

fn apply_typed(expected: AttackType, level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    if spec.attack_type != expected {
        return Err(AttackError::InvalidSpec(format!("expected a {expected} spec, got {}", spec.attack_type)));
    }
    apply(level, meter_id, series, spec)
}

/// Peak-hour overload.
pub fn apply_t1(level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    apply_typed(AttackType::T1Peak, level, meter_id, series, spec)
}

/// Bill reduction: a random window of at least `min_off_time` hours per day.
pub fn apply_t2(level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    apply_typed(AttackType::T2BillReduction, level, meter_id, series, spec)
}

/// Sharp peak-hour overload.
pub fn apply_t3(level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    apply_typed(AttackType::T3Sharp, level, meter_id, series, spec)
}

/// Fluctuation: runs of `period` intervals alternate between normal and
/// overloaded, starting normal at the first interval of each day.
pub fn apply_t4(level: Level, meter_id: Option<u32>, series: &[FeatureVector], spec: &AttackSpec) -> Result<LabeledSeries> {
    apply_typed(AttackType::T4Fluctuation, level, meter_id, series, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;

    fn day(e: f64) -> Vec<FeatureVector> {
        let date = NaiveDate::from_ymd_opt(2009, 7, 14).unwrap();
        (1..=24).map(|h| FeatureVector::new(date, Interval::Hour(h), e)).collect()
    }

    /// Hour index whose interval starts at `clock` o'clock.
    fn at_clock(clock: u8) -> usize {
        usize::from(clock)
    }

    #[test]
    fn t1_examples() {
        let spec = AttackSpec::new(AttackType::T1Peak, 3).with_factor(FactorRange::fixed(2.0));
        let out = apply_t1(Level::Sh, Some(1), &day(0.5), &spec).unwrap();
        assert_eq!(out.attacked[at_clock(12)], 0.5);
        assert_eq!(out.labels[at_clock(12)], Label::Benign);
        assert_eq!(out.attacked[at_clock(8)], 1.0);
        assert_eq!(out.labels[at_clock(8)], Label::Malicious);
        assert_eq!(out.malicious_count(), 7);
    }

    #[test]
    fn t3_examples() {
        let spec = AttackSpec::new(AttackType::T3Sharp, 3).with_factor(FactorRange::fixed(5.0));
        let out = apply_t3(Level::Sh, Some(1), &day(1.0), &spec).unwrap();
        assert_eq!(out.attacked[at_clock(20)], 5.0);
        assert!(out.labels[at_clock(20)].is_malicious());
        assert_eq!(out.attacked[at_clock(14)], 1.0);
    }

    #[test]
    fn t4_alternates() {
        let spec = AttackSpec::new(AttackType::T4Fluctuation, 9).with_factor(FactorRange::fixed(2.5));
        let out = apply_t4(Level::Sh, Some(1), &day(0.4), &spec).unwrap();
        assert_eq!(out.attacked[0], 0.4);
        assert_eq!(out.labels[0], Label::Benign);
        assert_eq!(out.attacked[1], 1.0);
        assert_eq!(out.labels[1], Label::Malicious);
        assert_eq!(out.malicious_count(), 12);
    }

    #[test]
    fn t2_window_respected() {
        let spec = AttackSpec::new(AttackType::T2BillReduction, 21).with_factor(FactorRange::fixed(3.0));
        let series = day(0.2);
        let w = bill_reduction_window(&spec, Some(4), series[0].date);
        assert!(w.end - w.start >= spec.min_off_time);
        let out = apply_t2(Level::Sh, Some(4), &series, &spec).unwrap();
        for (i, r) in series.iter().enumerate() {
            let inside = w.contains(r.interval.clock_hour());
            assert_eq!(out.labels[i].is_malicious(), inside);
            let want = if inside { 0.2 * 3.0 } else { 0.2 };
            assert_eq!(out.attacked[i], want);
        }
    }

    #[test]
    fn t2_windows_meet_minimum_for_many_days() {
        for m in [1u8, 4, 10, 23] {
            let spec = AttackSpec { min_off_time: m, ..AttackSpec::new(AttackType::T2BillReduction, 5) };
            for d in 0..300 {
                let date = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap() + Days::new(d);
                let w = bill_reduction_window(&spec, Some(2), date);
                assert!(w.end <= 23 && w.end - w.start >= m);
            }
        }
    }

    #[test]
    fn nbh_peak_covers_half_hours() {
        let date = NaiveDate::from_ymd_opt(2009, 7, 14).unwrap();
        let series: Vec<_> = (1..=48).map(|s| FeatureVector::new(date, Interval::Slot(s), 10.0)).collect();
        let spec = AttackSpec::new(AttackType::T1Peak, 1);
        let out = apply_t1(Level::Nbh, None, &series, &spec).unwrap();
        // 07:00-09:59 and 19:00-22:59
        assert_eq!(out.malicious_count(), 14);
        assert!(out.labels[14].is_malicious() && !out.labels[13].is_malicious());
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = AttackSpec::new(AttackType::T1Peak, 1);
        let bad = [
            base.clone().with_factor(FactorRange::new(0.0, 2.0)),
            AttackSpec { peak_windows: vec![PeakWindow { start: 20, end: 24 }], ..base.clone() },
            AttackSpec { min_off_time: 0, ..base.clone() },
            AttackSpec { period: 0, ..base.clone() },
        ];
        for spec in bad {
            assert!(apply(Level::Sh, Some(1), &day(1.0), &spec).is_err());
        }
        assert!(apply_t2(Level::Sh, Some(1), &day(1.0), &base).is_err());
    }

    #[test]
    fn misaligned_series_rejected() {
        let mut s = day(1.0);
        s.swap(3, 4);
        let spec = AttackSpec::new(AttackType::T2BillReduction, 1);
        assert!(matches!(apply_t2(Level::Sh, Some(1), &s, &spec), Err(AttackError::NotDayAligned(_))));
        assert!(matches!(apply_t2(Level::Nbh, None, &day(1.0), &spec), Err(AttackError::NotDayAligned(_))));
    }

    #[test]
    fn empty_series_is_a_no_op() {
        let spec = AttackSpec::new(AttackType::T1Peak, 1);
        let out = apply_t1(Level::Sh, Some(1), &[], &spec).unwrap();
        assert!(out.is_empty());
    }
}
