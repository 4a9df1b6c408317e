use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, IngestError, Result};

/// First Monday on or after `date`.
pub fn first_monday(date: NaiveDate) -> NaiveDate {
    let offset = (7 - date.weekday().num_days_from_monday()) % 7;
    date + Days::new(u64::from(offset))
}

/// Holds out one whole week out of every block of four consecutive weeks.
///
/// Weeks run Monday to Sunday and are anchored at the first Monday of the
/// data. Rows before that Monday, and rows after the last complete block of
/// four weeks, stay in the training set.
pub fn split_train_validation(d: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let (Some(first), Some(last)) = (d.rows.first(), d.rows.last()) else {
        return Err(IngestError::SplitSpan { whole_weeks: 0 });
    };
    let first_date = d.rows.iter().map(|r| r.date).min().unwrap_or(first.date);
    let last_date = d.rows.iter().map(|r| r.date).max().unwrap_or(last.date);
    let anchor = first_monday(first_date);
    let whole_weeks = if last_date < anchor {
        0
    } else {
        ((last_date - anchor).num_days() as usize + 1) / 7
    };
    if whole_weeks < 4 {
        return Err(IngestError::SplitSpan { whole_weeks });
    }

    let blocks = whole_weeks / 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let held_out: Vec<usize> = (0..blocks).map(|b| b * 4 + rng.random_range(0..4)).collect();

    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for r in &d.rows {
        let in_valid = r.date >= anchor && {
            let week = (r.date - anchor).num_days() as usize / 7;
            week < blocks * 4 && held_out.contains(&week)
        };
        if in_valid {
            valid.push(*r);
        } else {
            train.push(*r);
        }
    }
    Ok((d.with_rows(train), d.with_rows(valid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AttributeSet, FeatureVector, Interval, Level};
    use std::collections::BTreeSet;

    fn weeks_dataset(start: NaiveDate, days: u64) -> Dataset {
        let mut d = Dataset::new(Level::Sh, Some(9), AttributeSet::sh_default());
        for day in 0..days {
            for h in 1..=24 {
                d.rows.push(FeatureVector::new(start + Days::new(day), Interval::Hour(h), 1.0));
            }
        }
        d
    }

    fn monday() -> NaiveDate {
        // 2009-07-13 is a Monday
        NaiveDate::from_ymd_opt(2009, 7, 13).unwrap()
    }

    fn week_of(anchor: NaiveDate, date: NaiveDate) -> i64 {
        (date - anchor).num_days().div_euclid(7)
    }

    #[test]
    fn eight_weeks_give_two_validation_weeks() {
        let d = weeks_dataset(monday(), 56);
        let (train, valid) = split_train_validation(&d, 11).unwrap();
        let vweeks: BTreeSet<i64> = valid.rows.iter().map(|r| week_of(monday(), r.date)).collect();
        let tweeks: BTreeSet<i64> = train.rows.iter().map(|r| week_of(monday(), r.date)).collect();
        assert_eq!(vweeks.len(), 2);
        assert_eq!(tweeks.len(), 6);
        assert_eq!(vweeks.iter().filter(|&&w| w < 4).count(), 1);
        assert_eq!(valid.len(), 2 * 7 * 24);
    }

    #[test]
    fn same_seed_same_split() {
        let d = weeks_dataset(monday(), 84);
        let a = split_train_validation(&d, 3).unwrap();
        let b = split_train_validation(&d, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn three_weeks_is_too_short() {
        let d = weeks_dataset(monday(), 21);
        assert!(matches!(
            split_train_validation(&d, 1),
            Err(IngestError::SplitSpan { whole_weeks: 3 })
        ));
    }

    #[test]
    fn leading_partial_week_stays_in_training() {
        // Thursday start: the first three days precede the anchor Monday.
        let start = NaiveDate::from_ymd_opt(2009, 7, 9).unwrap();
        let d = weeks_dataset(start, 4 + 28);
        let (train, valid) = split_train_validation(&d, 5).unwrap();
        assert_eq!(train.len() + valid.len(), d.len());
        assert!(valid.rows.iter().all(|r| r.date >= monday()));
        assert_eq!(valid.len(), 7 * 24);
    }

    #[test]
    fn split_partitions_rows() {
        let d = weeks_dataset(monday(), 63);
        let (train, valid) = split_train_validation(&d, 99).unwrap();
        let t: BTreeSet<_> = train.rows.iter().map(|r| r.sort_key()).collect();
        let v: BTreeSet<_> = valid.rows.iter().map(|r| r.sort_key()).collect();
        assert!(t.is_disjoint(&v));
        assert_eq!(t.len() + v.len(), d.len());
    }

    #[test]
    fn first_monday_examples() {
        let thu = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap();
        assert_eq!(first_monday(thu), NaiveDate::from_ymd_opt(2009, 1, 5).unwrap());
        assert_eq!(first_monday(monday()), monday());
    }
}
