use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::{AttributeSet, DayPeriodBounds, Interval};
use super::raw::day_code_date;
use super::{Dataset, FeatureVector, IngestError, Level, MeterReading, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildOptions {
    /// Let SH learners split on day period too. Off by default: SH vectors
    /// carry hour, day type, month and season.
    pub sh_day_period: bool,
    pub day_period: DayPeriodBounds,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            sh_day_period: false,
            day_period: DayPeriodBounds::default(),
        }
    }
}

impl BuildOptions {
    pub fn sh_attributes(&self) -> AttributeSet {
        if self.sh_day_period {
            AttributeSet::all()
        } else {
            AttributeSet::sh_default()
        }
    }
}

/// Missing-data bookkeeping produced while building a dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    /// SH: hours with exactly one of their two half-hours present (excluded).
    /// NBH: slots where some meters did not report (kept, partial total).
    pub flagged: Vec<(NaiveDate, Interval)>,
    /// Repeated (meter, day, slot) readings; the first one wins.
    pub duplicates: usize,
}

fn provenance_of(days: impl IntoIterator<Item = u16>) -> Option<(NaiveDate, NaiveDate)> {
    let mut it = days.into_iter();
    let first = it.next()?;
    let (lo, hi) = it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d)));
    Some((day_code_date(lo), day_code_date(hi)))
}

/// Sums half-hour pairs (2k-1, 2k) into hour k for a single meter.
pub fn build_sh_dataset(readings: &[MeterReading], opts: &BuildOptions) -> Result<(Dataset, BuildReport)> {
    let meter_id = readings.first().map(|r| r.meter_id);
    if let Some(first) = meter_id {
        if let Some(other) = readings.iter().find(|r| r.meter_id != first) {
            return Err(IngestError::MixedMeters {
                first,
                other: other.meter_id,
            });
        }
    }

    let mut report = BuildReport::default();
    let mut hours: BTreeMap<(u16, u8), [Option<f64>; 2]> = BTreeMap::new();
    for r in readings {
        let hour = r.slot.div_ceil(2);
        let half = usize::from((r.slot + 1) % 2);
        let cell = &mut hours.entry((r.day_code, hour)).or_default()[half];
        if cell.is_some() {
            report.duplicates += 1;
        } else {
            *cell = Some(r.kwh);
        }
    }

    let mut ds = Dataset::new(Level::Sh, meter_id, opts.sh_attributes());
    ds.provenance = provenance_of(readings.iter().map(|r| r.day_code));
    for ((day, hour), halves) in hours {
        let date = day_code_date(day);
        let interval = Interval::Hour(hour);
        match halves {
            [Some(a), Some(b)] => ds.rows.push(FeatureVector::with_bounds(
                date,
                interval,
                a + b,
                &opts.day_period,
            )),
            _ => report.flagged.push((date, interval)),
        }
    }
    Ok((ds, report))
}

/// Neighborhood totals per (date, slot) across every meter in `readings`.
pub fn build_nbh_dataset(readings: &[MeterReading], opts: &BuildOptions) -> (Dataset, BuildReport) {
    let meters: BTreeSet<u32> = readings.iter().map(|r| r.meter_id).collect();
    let mut seen: BTreeSet<(u32, u16, u8)> = BTreeSet::new();
    let mut slots: BTreeMap<(u16, u8), (f64, usize)> = BTreeMap::new();
    let mut report = BuildReport::default();
    for r in readings {
        if !seen.insert((r.meter_id, r.day_code, r.slot)) {
            report.duplicates += 1;
            continue;
        }
        let cell = slots.entry((r.day_code, r.slot)).or_insert((0.0, 0));
        cell.0 += r.kwh;
        cell.1 += 1;
    }

    let mut ds = Dataset::new(Level::Nbh, None, AttributeSet::all());
    ds.provenance = provenance_of(readings.iter().map(|r| r.day_code));
    for ((day, slot), (total, count)) in slots {
        let date = day_code_date(day);
        let interval = Interval::Slot(slot);
        if count < meters.len() {
            report.flagged.push((date, interval));
        }
        ds.rows
            .push(FeatureVector::with_bounds(date, interval, total, &opts.day_period));
    }
    (ds, report)
}

/// Groups readings by meter id, preserving per-meter file order.
pub fn group_by_meter(readings: &[MeterReading]) -> BTreeMap<u32, Vec<MeterReading>> {
    let mut out: BTreeMap<u32, Vec<MeterReading>> = BTreeMap::new();
    for r in readings {
        out.entry(r.meter_id).or_default().push(*r);
    }
    out
}
