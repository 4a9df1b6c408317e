use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::features::{AttributeSet, DayPeriod, DayType, Interval, Season};
use super::{Dataset, FeatureVector, IngestError, Level, Result};

pub const DATASET_HEADER: [&str; 10] = [
    "level",
    "meter_id",
    "date",
    "interval",
    "hour_or_slot",
    "day_period",
    "day_type",
    "month",
    "season",
    "consumption_kwh",
];

/// One persisted dataset row. Files may carry extra trailing columns (for
/// example `label`), which are ignored on read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub level: Level,
    pub meter_id: Option<u32>,
    pub date: NaiveDate,
    pub interval: String,
    pub hour_or_slot: u8,
    pub day_period: DayPeriod,
    pub day_type: DayType,
    pub month: u8,
    pub season: Season,
    pub consumption_kwh: f64,
}

fn record_fields(level: Level, meter_id: Option<u32>, r: &FeatureVector) -> [String; 10] {
    [
        level.as_str().to_string(),
        meter_id.map(|m| m.to_string()).unwrap_or_default(),
        r.date.to_string(),
        r.interval.label(),
        r.interval.index().to_string(),
        r.day_period.as_str().to_string(),
        r.day_type.as_str().to_string(),
        r.month.to_string(),
        r.season.as_str().to_string(),
        r.consumption.to_string(),
    ]
}

/// Writes datasets in the shared row schema, optionally with a trailing
/// `label` column.
pub fn write_datasets_csv<'a, W: Write>(
    writer: W,
    datasets: impl IntoIterator<Item = &'a Dataset>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DATASET_HEADER)?;
    for d in datasets {
        for r in &d.rows {
            w.write_record(record_fields(d.level, d.meter_id, r))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes loose rows with a `label` column appended to the dataset schema.
pub fn write_rows_csv<'a, W: Write>(
    writer: W,
    rows: impl IntoIterator<Item = (Level, Option<u32>, &'a FeatureVector, &'a str)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = DATASET_HEADER.to_vec();
    header.push("label");
    w.write_record(&header)?;
    for (level, meter, r, label) in rows {
        let mut fields = record_fields(level, meter, r).to_vec();
        fields.push(label.to_string());
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset CSV back, one [`Dataset`] per (level, meter) in key order.
pub fn read_datasets_csv<R: Read>(reader: R, sh_attributes: AttributeSet) -> Result<Vec<Dataset>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut grouped: BTreeMap<(Level, Option<u32>), Vec<FeatureVector>> = BTreeMap::new();
    for (i, rec) in rdr.deserialize::<DatasetRecord>().enumerate() {
        let rec = rec?;
        let (interval, expect_meter) = match rec.level {
            Level::Sh => (Interval::Hour(rec.hour_or_slot), true),
            Level::Nbh => (Interval::Slot(rec.hour_or_slot), false),
        };
        let schema = |message: String| IngestError::Schema { row: i + 1, message };
        if !interval.is_valid() {
            return Err(schema(format!("interval {} out of range", rec.hour_or_slot)));
        }
        if expect_meter != rec.meter_id.is_some() {
            return Err(schema("meter_id must be set for sh rows and empty for nbh rows".into()));
        }
        if !(rec.consumption_kwh >= 0.0) {
            return Err(schema(format!("invalid consumption {}", rec.consumption_kwh)));
        }
        grouped
            .entry((rec.level, rec.meter_id))
            .or_default()
            .push(FeatureVector {
                date: rec.date,
                interval,
                day_period: rec.day_period,
                day_type: rec.day_type,
                month: rec.month,
                season: rec.season,
                consumption: rec.consumption_kwh,
            });
    }
    Ok(grouped
        .into_iter()
        .map(|((level, meter_id), rows)| {
            let attributes = match level {
                Level::Sh => sh_attributes,
                Level::Nbh => AttributeSet::all(),
            };
            let mut d = Dataset::new(level, meter_id, attributes);
            d.provenance = rows.first().zip(rows.last()).map(|(a, b)| (a.date, b.date));
            d.rows = rows;
            d.normalize();
            d
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;

    #[test]
    fn csv_round_trip_preserves_rows() {
        let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap();
        let mut sh = Dataset::new(Level::Sh, Some(1392), AttributeSet::sh_default());
        let mut nbh = Dataset::new(Level::Nbh, None, AttributeSet::all());
        for d in 0..3u64 {
            for h in 1..=24u8 {
                sh.rows.push(FeatureVector::new(start + Days::new(d), Interval::Hour(h), 0.1 * f64::from(h) + 1e-3 / 3.0));
            }
            for s in 1..=48u8 {
                nbh.rows.push(FeatureVector::new(start + Days::new(d), Interval::Slot(s), 3.0 + f64::from(s) / 7.0));
            }
        }
        let mut buf = Vec::new();
        write_datasets_csv(&mut buf, [&sh, &nbh]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("level,meter_id,date,interval,hour_or_slot,day_period,day_type,month,season,consumption_kwh\n"));
        assert!(text.contains("sh,1392,2009-07-13,00:00-00:59,1,night,weekday,7,summer,"));
        let back = read_datasets_csv(buf.as_slice(), AttributeSet::sh_default()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].rows, sh.rows);
        assert_eq!(back[1].rows, nbh.rows);
    }

    #[test]
    fn bad_interval_is_a_schema_error() {
        let text = "level,meter_id,date,interval,hour_or_slot,day_period,day_type,month,season,consumption_kwh\n\
                    sh,1,2009-07-13,x,30,day,weekday,7,summer,0.5\n";
        assert!(matches!(
            read_datasets_csv(text.as_bytes(), AttributeSet::sh_default()),
            Err(IngestError::Schema { row: 1, .. })
        ));
    }
}
