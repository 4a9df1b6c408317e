use std::collections::BTreeMap;

use super::{Dataset, FeatureVector};

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome {
    pub dataset: Dataset,
    pub removed: Vec<FeatureVector>,
    /// (month, interval index) groups with fewer than two rows; left untouched.
    pub skipped_groups: Vec<(u8, u8)>,
}

/// Removes rows whose consumption lies more than three population standard
/// deviations from the mean of their (month, interval) group.
pub fn clean_dataset(d: &Dataset) -> CleanOutcome {
    let mut groups: BTreeMap<(u8, u8), Vec<f64>> = BTreeMap::new();
    for r in &d.rows {
        groups
            .entry((r.month, r.interval.index()))
            .or_default()
            .push(r.consumption);
    }

    let mut bands: BTreeMap<(u8, u8), (f64, f64)> = BTreeMap::new();
    let mut skipped_groups = Vec::new();
    for (key, values) in &groups {
        if values.len() < 2 {
            log::warn!(
                "cleaning: group month {} interval {} has {} row(s), skipped",
                key.0,
                key.1,
                values.len()
            );
            skipped_groups.push(*key);
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        bands.insert(*key, (mean, var.sqrt()));
    }

    let mut kept = Vec::with_capacity(d.rows.len());
    let mut removed = Vec::new();
    for r in &d.rows {
        let outlier = match bands.get(&(r.month, r.interval.index())) {
            Some(&(mean, sd)) if sd > 0.0 => (r.consumption - mean).abs() > 3.0 * sd,
            _ => false,
        };
        if outlier {
            removed.push(*r);
        } else {
            kept.push(*r);
        }
    }

    CleanOutcome {
        dataset: d.with_rows(kept),
        removed,
        skipped_groups,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AttributeSet, Interval, Level};
    use chrono::{Days, NaiveDate};

    /// One row per value, all in the same (month, hour) group.
    fn group(values: &[f64]) -> Dataset {
        let start = NaiveDate::from_ymd_opt(2009, 7, 1).unwrap();
        let mut d = Dataset::new(Level::Sh, Some(1), AttributeSet::sh_default());
        d.rows = values
            .iter()
            .enumerate()
            .map(|(i, &v)| FeatureVector::new(start + Days::new(i as u64 % 28), Interval::Hour(5), v))
            .collect();
        d
    }

    fn mean_sd(values: &[f64]) -> (f64, f64) {
        let n = values.len() as f64;
        let m = values.iter().sum::<f64>() / n;
        (m, (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt())
    }

    #[test]
    fn spread_group_keeps_large_value() {
        let values = [1.0, 1.0, 1.0, 1.0, 100.0];
        let (m, sd) = mean_sd(&values);
        assert!((m - 20.8).abs() < 1e-12);
        assert!((sd - 39.6).abs() < 1e-9);
        let out = clean_dataset(&group(&values));
        assert!(out.removed.is_empty());
        assert_eq!(out.dataset.len(), 5);
    }

    #[test]
    fn constant_group_untouched() {
        let out = clean_dataset(&group(&[2.0, 2.0, 2.0, 2.0]));
        assert!(out.removed.is_empty());
    }

    #[test]
    fn isolated_spike_removed() {
        let mut values = vec![1.0; 30];
        values.push(50.0);
        let (m, sd) = mean_sd(&values);
        assert!((m - 2.58).abs() < 0.01 && (sd - 8.66).abs() < 0.01);
        let out = clean_dataset(&group(&values));
        assert_eq!(out.removed.len(), 1);
        assert_eq!(out.removed[0].consumption, 50.0);
        assert_eq!(out.dataset.len(), 30);
    }

    #[test]
    fn singleton_group_skipped() {
        let out = clean_dataset(&group(&[3.0]));
        assert_eq!(out.skipped_groups, vec![(7, 5)]);
        assert_eq!(out.dataset.len(), 1);
    }

    #[test]
    fn second_pass_is_stable_on_fixture() {
        let mut values: Vec<f64> = (0..40).map(|i| 1.0 + 0.01 * f64::from(i % 5)).collect();
        values.push(9.0);
        let first = clean_dataset(&group(&values));
        assert_eq!(first.removed.len(), 1);
        let second = clean_dataset(&first.dataset);
        assert!(second.removed.is_empty());
    }
}
