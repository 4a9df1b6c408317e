//! Raw meter data ingestion.
//!
//! Raw trial files hold one reading per line: meter id, a 5-digit encoded
//! timestamp and the consumed energy in kWh. The first three digits of the
//! timestamp are a day code (day 1 is 2009-01-01) and the last two are a
//! half-hour slot (slot 1 is 00:00:00-00:29:59).
//!
//! From the decoded readings this module builds two kinds of [`Dataset`]:
//! hourly per-home (SH) series, and half-hourly neighborhood (NBH) totals.
//! Both carry the calendar attributes the learners split on.

mod build;
mod clean;
mod csv_io;
mod features;
mod raw;
mod split;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{build_nbh_dataset, build_sh_dataset, group_by_meter, BuildOptions, BuildReport};
pub use clean::{clean_dataset, CleanOutcome};
pub use csv_io::{read_datasets_csv, write_datasets_csv, write_rows_csv, DatasetRecord};
pub use features::{
    derive_features, Attribute, AttributeSet, DayPeriod, DayPeriodBounds, DayType, Interval,
    Season, TimeAttributes,
};
pub use raw::{
    decode_timestamp, encode_timestamp, epoch, open_raw, parse_raw, parse_raw_line, ParseIssue,
    ParseOutcome,
};
pub use split::{first_monday, split_train_validation};

pub const SLOTS_PER_DAY: u8 = 48;
pub const HOURS_PER_DAY: u8 = 24;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("timestamp {code}: slot {slot} is outside 1..=48")]
    SlotRange { code: u32, slot: u32 },
    #[error("timestamp {code}: day code must be between 1 and 999")]
    DayRange { code: u32 },
    #[error("negative consumption {kwh} kWh")]
    NegativeConsumption { kwh: f64 },
    #[error("SH dataset needs a single meter, found {first} and {other}")]
    MixedMeters { first: u32, other: u32 },
    #[error("dataset spans {whole_weeks} whole weeks, at least 4 are needed for a split")]
    SplitSpan { whole_weeks: usize },
    #[error("dataset csv row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// One decoded half-hourly consumption sample from one meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterReading {
    pub meter_id: u32,
    pub day_code: u16,
    pub slot: u8,
    pub kwh: f64,
}

impl MeterReading {
    pub fn date(&self) -> NaiveDate {
        raw::day_code_date(self.day_code)
    }

    pub fn encoded_timestamp(&self) -> u32 {
        encode_timestamp(self.day_code, self.slot)
    }
}

/// Monitoring level. SH rows are hourly, NBH rows half-hourly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Sh,
    Nbh,
}

impl Level {
    pub fn intervals_per_day(self) -> u8 {
        match self {
            Level::Sh => HOURS_PER_DAY,
            Level::Nbh => SLOTS_PER_DAY,
        }
    }

    pub fn interval(self, index: u8) -> Interval {
        match self {
            Level::Sh => Interval::Hour(index),
            Level::Nbh => Interval::Slot(index),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Sh => "sh",
            Level::Nbh => "nbh",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sh" => Ok(Level::Sh),
            "nbh" => Ok(Level::Nbh),
            other => Err(format!("unknown level '{other}'")),
        }
    }
}

/// A dataset row: the time attributes of one interval plus its consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub date: NaiveDate,
    pub interval: Interval,
    pub day_period: DayPeriod,
    pub day_type: DayType,
    pub month: u8,
    pub season: Season,
    /// Regression target, kWh over the interval.
    pub consumption: f64,
}

impl FeatureVector {
    pub fn new(date: NaiveDate, interval: Interval, consumption: f64) -> Self {
        Self::with_bounds(date, interval, consumption, &DayPeriodBounds::default())
    }

    pub fn with_bounds(
        date: NaiveDate,
        interval: Interval,
        consumption: f64,
        bounds: &DayPeriodBounds,
    ) -> Self {
        let t = derive_features(date, interval, bounds);
        FeatureVector {
            date,
            interval,
            day_period: t.day_period,
            day_type: t.day_type,
            month: t.month,
            season: t.season,
            consumption,
        }
    }

    /// Small-integer encoding of one attribute, as used by split tests.
    pub fn code(&self, attribute: Attribute) -> u8 {
        match attribute {
            Attribute::Interval => self.interval.index(),
            Attribute::DayPeriod => self.day_period as u8,
            Attribute::DayType => self.day_type as u8,
            Attribute::Month => self.month,
            Attribute::Season => self.season as u8,
        }
    }

    pub fn sort_key(&self) -> (NaiveDate, u8) {
        (self.date, self.interval.index())
    }
}

/// An ordered collection of rows at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub level: Level,
    /// Set for SH datasets only.
    pub meter_id: Option<u32>,
    /// Attributes the learners may split on.
    pub attributes: AttributeSet,
    pub rows: Vec<FeatureVector>,
    /// First and last source date the dataset was built from.
    pub provenance: Option<(NaiveDate, NaiveDate)>,
}

impl Dataset {
    pub fn new(level: Level, meter_id: Option<u32>, attributes: AttributeSet) -> Self {
        Dataset {
            level,
            meter_id,
            attributes,
            rows: Vec::new(),
            provenance: None,
        }
    }

    /// Same header (level, meter, attributes, provenance), different rows.
    pub fn with_rows(&self, rows: Vec<FeatureVector>) -> Self {
        Dataset {
            level: self.level,
            meter_id: self.meter_id,
            attributes: self.attributes,
            rows,
            provenance: self.provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.consumption).collect()
    }

    /// Restores chronological order and drops repeated (date, interval) rows,
    /// keeping the first occurrence.
    pub fn normalize(&mut self) {
        self.rows.sort_by_key(|r| r.sort_key());
        self.rows.dedup_by_key(|r| r.sort_key());
    }

    pub fn is_chronological(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].sort_key() < w[1].sort_key())
    }
}
