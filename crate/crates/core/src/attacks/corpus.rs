use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::NaiveDate;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::Dataset;
use crate::rng::keyed_rng;

use super::{apply, day_number, meter_key, AttackError, AttackSpec, AttackType, LabeledSeries, Result};

pub const CORPUS_HEADER: [&str; 8] = [
    "meter_id",
    "date",
    "interval",
    "base_kwh",
    "attacked_kwh",
    "label",
    "attack_type",
    "seed",
];

/// Share of days receiving each attack type, each in [0, 1].
pub type AttackMix = BTreeMap<AttackType, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    Benign,
    Attack(AttackType),
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Benign => "none",
            Variant::Attack(t) => t.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub variant: Variant,
    pub series: LabeledSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    /// Distinct days per variant.
    pub fn days(&self, variant: Variant) -> usize {
        self.entries
            .iter()
            .filter(|e| e.variant == variant)
            .flat_map(|e| e.series.base.iter().map(move |r| (e.series.meter_id, r.date)))
            .collect::<BTreeSet<_>>()
            .len()
    }
}

fn day_selected(seed: u64, t: AttackType, meter: Option<u32>, date: NaiveDate, share: f64) -> bool {
    if share >= 1.0 {
        return true;
    }
    let mut rng = keyed_rng(&[seed, t.code(), meter_key(meter), day_number(date), 0xD1CE]);
    rng.random::<f64>() < share
}

/// Labeled benign and attacked variants of every dataset.
///
/// Each dataset contributes one benign copy of all its rows and, per attack
/// type with a positive share, an attacked copy of the days selected for
/// that type. `templates` override the default spec of a type; their seed is
/// replaced by `seed`.
pub fn generate_corpus(datasets: &[Dataset], mix: &AttackMix, templates: &[AttackSpec], seed: u64) -> Result<Corpus> {
    if datasets.is_empty() || datasets.iter().any(|d| d.is_empty()) {
        return Err(AttackError::EmptyDataset);
    }
    let specs: Vec<(AttackType, f64, AttackSpec)> = mix
        .iter()
        .filter(|(_, &share)| share > 0.0)
        .map(|(&t, &share)| {
            let base = templates
                .iter()
                .find(|s| s.attack_type == t)
                .cloned()
                .unwrap_or_else(|| AttackSpec::new(t, seed));
            (t, share, AttackSpec { seed, ..base })
        })
        .collect();
    for (_, share, spec) in &specs {
        if !(0.0..=1.0).contains(share) {
            return Err(AttackError::InvalidSpec(format!("mix share {share} outside [0, 1]")));
        }
        spec.validate()?;
    }

    let per_dataset: Vec<Result<Vec<CorpusEntry>>> = datasets
        .par_iter()
        .map(|d| {
            let mut entries = vec![CorpusEntry {
                variant: Variant::Benign,
                series: LabeledSeries::benign(d.level, d.meter_id, &d.rows),
            }];
            for (t, share, spec) in &specs {
                let rows: Vec<_> = d
                    .rows
                    .iter()
                    .filter(|r| day_selected(seed, *t, d.meter_id, r.date, *share))
                    .copied()
                    .collect();
                entries.push(CorpusEntry {
                    variant: Variant::Attack(*t),
                    series: apply(d.level, d.meter_id, &rows, spec)?,
                });
            }
            Ok(entries)
        })
        .collect();

    let mut entries = Vec::new();
    for r in per_dataset {
        entries.extend(r?);
    }
    Ok(Corpus { seed, entries })
}

pub fn write_corpus_csv<W: Write>(writer: W, corpus: &Corpus) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CORPUS_HEADER)?;
    let seed = corpus.seed.to_string();
    for e in &corpus.entries {
        let meter = e.series.meter_id.map(|m| m.to_string()).unwrap_or_default();
        for ((r, a), l) in e.series.base.iter().zip(&e.series.attacked).zip(&e.series.labels) {
            w.write_record([
                meter.as_str(),
                &r.date.to_string(),
                &r.interval.index().to_string(),
                &r.consumption.to_string(),
                &a.to_string(),
                l.as_str(),
                e.variant.as_str(),
                &seed,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
