use std::collections::BTreeMap;
use std::io::{Cursor, Write};
use std::time::Instant;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{generate_corpus, AttackMix, AttackSpec, AttackType, LabeledSeries, Variant};
use crate::detect::{
    interval_start, AlertEvent, DecisionMaker, DetectorParams, NbhDetector, ShDetector, StepOutcome,
};
use crate::ingest::{
    build_nbh_dataset, build_sh_dataset, clean_dataset, group_by_meter, parse_raw, split_train_validation,
    BuildOptions, Dataset, FeatureVector, Interval, Level,
};
use crate::models::{
    error_metrics, train_and_validate, ModelParams, ModelTreeParams, RepTreeParams, TreeModel,
};

use super::bench::{benchmark_models, BenchmarkRow};
use super::metrics::{roc_curve, Confusion, Rates, RocCurve};
use super::synth::{synth_generate, write_raw, SynthProfile};
use super::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nb_sh: usize,
    pub weeks: usize,
    pub seed: u64,
    pub profile: SynthProfile,
    pub build: BuildOptions,
    /// Share of validation days attacked, per type.
    pub attack_mix: AttackMix,
    /// Per-type overrides of the default attack specs.
    pub attack_specs: Vec<AttackSpec>,
    pub detector: DetectorParams,
    pub sh_model: ModelParams,
    pub nbh_model: ModelParams,
    /// Drop 3-sigma outliers before splitting.
    pub clean: bool,
    /// Also train the other learner on every home, for the benchmark table.
    pub benchmark: bool,
    /// ROC points kept in the report; the full curves go to CSV.
    pub roc_points: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            nb_sh: 50,
            weeks: 8,
            seed: 7,
            profile: SynthProfile::default(),
            build: BuildOptions::default(),
            attack_mix: AttackType::ALL.iter().map(|&t| (t, 1.0)).collect(),
            attack_specs: Vec::new(),
            detector: DetectorParams::default(),
            sh_model: ModelParams::ModelTree(ModelTreeParams::default()),
            nbh_model: ModelParams::RepTree(RepTreeParams::default()),
            clean: true,
            benchmark: true,
            roc_points: 101,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nb_sh == 0 {
            return Err(HarnessError::Config("nb_sh must be at least 1".into()));
        }
        if self.weeks < 4 {
            return Err(HarnessError::Config(format!("weeks is {}, at least 4 are needed", self.weeks)));
        }
        if let Some((t, s)) = self.attack_mix.iter().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(HarnessError::Config(format!("attack_mix share {s} for {t} outside [0, 1]")));
        }
        for s in &self.attack_specs {
            s.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.detector.n_window == 0 {
            return Err(HarnessError::Config("n_window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Interval and alert scores of one variant at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub intervals: u64,
    pub confusion: Confusion,
    /// Pooled over all streams; an interval is positive when flagged.
    pub rates: Rates,
    /// Mean of the per-stream rates.
    pub macro_rates: Option<Rates>,
    pub alerts: usize,
    /// Rates with only alert-raising intervals counted as positive.
    pub alert_rates: Option<Rates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScore {
    #[serde(flatten)]
    pub score: VariantScore,
    /// Prediction error against the benign consumption of the attacked rows.
    pub rmse_benign: f64,
    /// Prediction error against the attacked consumption.
    pub rmse_attack: f64,
    pub auc: Option<f64>,
    pub roc: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub benign: VariantScore,
    pub attacks: BTreeMap<AttackType, AttackScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub sh_kind: String,
    pub sh_rmse_mean: f64,
    pub sh_rmse_min: f64,
    pub sh_rmse_max: f64,
    pub sh_mae_mean: f64,
    pub sh_leaves_mean: f64,
    pub sh_model_bytes_mean: f64,
    pub sh_model_bytes_max: usize,
    pub sh_singular_fits: usize,
    pub nbh_kind: String,
    pub nbh_rmse: f64,
    pub nbh_mae: f64,
    pub nbh_leaves: usize,
    pub nbh_depth: usize,
    pub nbh_model_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub readings: usize,
    pub sh_meters: usize,
    pub sh_train_rows: usize,
    pub sh_validation_rows: usize,
    pub sh_cleaned_rows: usize,
    pub nbh_train_rows: usize,
    pub nbh_validation_rows: usize,
    pub nbh_cleaned_rows: usize,
    pub validation_days: usize,
}

/// Everything in here is a pure function of the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub nb_sh: usize,
    pub weeks: usize,
    pub data: DataSummary,
    pub models: ModelSummary,
    pub sh: LevelReport,
    pub nbh: LevelReport,
    /// Decision-maker verdict per half-hour. Truth is an attacked NBH slot
    /// or a majority of homes attacked in that hour.
    pub fusion: BTreeMap<String, VariantScore>,
}

/// An alert tagged with the corpus variant it was raised on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioAlert {
    pub variant: String,
    #[serde(flatten)]
    pub event: AlertEvent,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: EvaluationReport,
    pub alerts: Vec<ScenarioAlert>,
    pub roc_curves: BTreeMap<(Level, AttackType), RocCurve>,
    /// Both learners on every home. Wall-clock columns vary between runs.
    pub benchmark: Vec<BenchmarkRow>,
    /// Seconds per stage. Kept out of the report so reports stay identical.
    pub timings: BTreeMap<String, f64>,
}

struct Stopwatch {
    at: Instant,
    laps: BTreeMap<String, f64>,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch { at: Instant::now(), laps: BTreeMap::new() }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.laps.insert(stage.to_string(), (now - self.at).as_secs_f64());
        self.at = now;
    }
}

struct Home {
    meter_id: u32,
    train: Dataset,
    valid: Dataset,
    cleaned: usize,
}

/// One stream replayed through its detector.
struct Replay {
    rows: Vec<FeatureVector>,
    truth: Vec<bool>,
    flags: Vec<bool>,
    alert_at: Vec<bool>,
    scores: Vec<f64>,
    err_benign: Vec<f64>,
    err_attack: Vec<f64>,
    alerts: Vec<AlertEvent>,
}

fn replay<F>(model: &TreeModel, series: &LabeledSeries, mut step: F) -> crate::detect::Result<Replay>
where
    F: FnMut(&FeatureVector, f64) -> crate::detect::Result<StepOutcome>,
{
    let n = series.len();
    let mut r = Replay {
        rows: Vec::with_capacity(n),
        truth: series.labels.iter().map(|l| l.is_malicious()).collect(),
        flags: Vec::with_capacity(n),
        alert_at: Vec::with_capacity(n),
        scores: Vec::with_capacity(n),
        err_benign: Vec::with_capacity(n),
        err_attack: Vec::with_capacity(n),
        alerts: Vec::new(),
    };
    for (row, base) in series.attacked_rows().zip(&series.base) {
        let predicted = model.predict(&row);
        let out = step(&row, predicted)?;
        r.scores.push(row.consumption - (predicted + out.threshold));
        r.err_benign.push(predicted - base.consumption);
        r.err_attack.push(predicted - row.consumption);
        r.flags.push(out.flagged);
        r.alert_at.push(out.alert.is_some());
        r.alerts.extend(out.alert);
        r.rows.push(row);
    }
    Ok(r)
}

fn replay_sh(model: &TreeModel, params: DetectorParams, series: &LabeledSeries) -> crate::detect::Result<Replay> {
    let mut det = ShDetector::new(series.meter_id.unwrap_or(0), model.clone(), params);
    replay(model, series, |f, p| det.step_with_prediction(f, p))
}

fn replay_nbh(model: &TreeModel, series: &LabeledSeries) -> crate::detect::Result<Replay> {
    let mut det = NbhDetector::new(model.clone());
    replay(model, series, |f, p| det.step_with_prediction(f, p))
}

fn confusion_of(pred: &[bool], truth: &[bool]) -> Confusion {
    let mut c = Confusion::default();
    for (&p, &t) in pred.iter().zip(truth) {
        c.add(p, t);
    }
    c
}

fn score_variant(replays: &[&Replay]) -> VariantScore {
    let mut pooled = Confusion::default();
    let mut alert_pooled = Confusion::default();
    let mut per_stream = Vec::with_capacity(replays.len());
    for r in replays {
        let c = confusion_of(&r.flags, &r.truth);
        pooled.merge(&c);
        per_stream.push(c.rates());
        alert_pooled.merge(&confusion_of(&r.alert_at, &r.truth));
    }
    VariantScore {
        intervals: pooled.total(),
        confusion: pooled,
        rates: pooled.rates(),
        macro_rates: Some(Rates::macro_average(&per_stream)),
        alerts: replays.iter().map(|r| r.alerts.len()).sum(),
        alert_rates: Some(alert_pooled.rates()),
    }
}

fn score_attack(replays: &[&Replay], roc_points: usize) -> (AttackScore, Option<RocCurve>) {
    let cat = |get: fn(&Replay) -> &Vec<f64>| -> Vec<f64> { replays.iter().flat_map(|r| get(r).iter().copied()).collect() };
    let truth: Vec<bool> = replays.iter().flat_map(|r| r.truth.iter().copied()).collect();
    let curve = roc_curve(&cat(|r| &r.scores), &truth).ok();
    let score = AttackScore {
        score: score_variant(replays),
        rmse_benign: error_metrics(&cat(|r| &r.err_benign)).rmse,
        rmse_attack: error_metrics(&cat(|r| &r.err_attack)).rmse,
        auc: curve.as_ref().map(|c| c.auc),
        roc: curve.as_ref().map(|c| c.thinned(roc_points)).unwrap_or_default(),
    };
    (score, curve)
}

/// Hour of day (1..=24) an NBH slot falls in.
fn slot_hour(slot: u8) -> u8 {
    slot.div_ceil(2)
}

fn fuse_variant(
    nb_sh: usize,
    ticks: &[(NaiveDate, u8)],
    sh: &[&Replay],
    nbh: Option<&Replay>,
) -> (VariantScore, Vec<AlertEvent>) {
    // An SH alert covers both half-hours of its hour.
    let mut sh_alerts: BTreeMap<(NaiveDate, u8), usize> = BTreeMap::new();
    let mut sh_attacked: BTreeMap<(NaiveDate, u8), usize> = BTreeMap::new();
    for r in sh {
        for (i, row) in r.rows.iter().enumerate() {
            let key = (row.date, row.interval.index());
            if r.alert_at[i] {
                *sh_alerts.entry(key).or_default() += 1;
            }
            if r.truth[i] {
                *sh_attacked.entry(key).or_default() += 1;
            }
        }
    }
    let mut nacr: BTreeMap<(NaiveDate, u8), (Option<&AlertEvent>, bool)> = BTreeMap::new();
    if let Some(r) = nbh {
        let mut alerts = r.alerts.iter();
        for (i, row) in r.rows.iter().enumerate() {
            let event = if r.alert_at[i] { alerts.next() } else { None };
            nacr.insert((row.date, row.interval.index()), (event, r.truth[i]));
        }
    }

    let mut dm = DecisionMaker::new(nb_sh);
    let mut c = Confusion::default();
    for &(date, slot) in ticks {
        let hour = (date, slot_hour(slot));
        let nb_alert = sh_alerts.get(&hour).copied().unwrap_or(0);
        let (event, nbh_truth) = nacr.get(&(date, slot)).copied().unwrap_or((None, false));
        let truth = nbh_truth || 2 * sh_attacked.get(&hour).copied().unwrap_or(0) > nb_sh;
        let ts = interval_start(date, Interval::Slot(slot));
        let confirmed = dm.fuse(ts, slot, event, nb_alert).is_some();
        c.add(confirmed, truth);
    }
    let score = VariantScore {
        intervals: c.total(),
        confusion: c,
        rates: c.rates(),
        macro_rates: None,
        alerts: dm.operator_log.len(),
        alert_rates: None,
    };
    (score, dm.operator_log)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn summarize_models(sh: &[TreeModel], nbh: &TreeModel) -> ModelSummary {
    let rmse = sh.iter().map(|m| m.trained_rmse);
    ModelSummary {
        sh_kind: sh.first().map(|m| m.kind.as_str()).unwrap_or_default().to_string(),
        sh_rmse_mean: mean(rmse.clone()),
        sh_rmse_min: rmse.clone().fold(f64::INFINITY, f64::min),
        sh_rmse_max: rmse.fold(0.0, f64::max),
        sh_mae_mean: mean(sh.iter().map(|m| m.trained_mae)),
        sh_leaves_mean: mean(sh.iter().map(|m| m.leaves() as f64)),
        sh_model_bytes_mean: mean(sh.iter().map(|m| m.model_bytes() as f64)),
        sh_model_bytes_max: sh.iter().map(|m| m.model_bytes()).max().unwrap_or(0),
        sh_singular_fits: sh.iter().map(|m| m.meta.singular_fits).sum(),
        nbh_kind: nbh.kind.as_str().to_string(),
        nbh_rmse: nbh.trained_rmse,
        nbh_mae: nbh.trained_mae,
        nbh_leaves: nbh.leaves(),
        nbh_depth: nbh.depth(),
        nbh_model_bytes: nbh.model_bytes(),
    }
}

fn other_learner(p: &ModelParams, seed: u64) -> ModelParams {
    match p {
        ModelParams::ModelTree(_) => ModelParams::RepTree(RepTreeParams { seed, ..Default::default() }),
        ModelParams::RepTree(_) => ModelParams::ModelTree(ModelTreeParams { seed, ..Default::default() }),
    }
}

fn group(replays: &[(Variant, Replay)]) -> BTreeMap<Variant, Vec<&Replay>> {
    let mut out: BTreeMap<Variant, Vec<&Replay>> = BTreeMap::new();
    for (v, r) in replays {
        out.entry(*v).or_default().push(r);
    }
    out
}

/// Runs the whole pipeline for one config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let mut clock = Stopwatch::new();

    let synthetic = synth_generate(&cfg.profile, cfg.nb_sh, cfg.weeks, cfg.seed)?;
    let mut raw = Vec::new();
    write_raw(&mut raw, &synthetic)?;
    drop(synthetic);
    clock.lap("synth");

    let parsed = parse_raw(Cursor::new(raw)).map_err(|e| HarnessError::stage("ingest", e))?;
    if let Some(issue) = parsed.issues.first() {
        return Err(HarnessError::stage("ingest", format!("line {}: {}", issue.line, issue.message)));
    }
    let readings = parsed.readings;
    let by_meter = group_by_meter(&readings);
    let homes: Vec<Result<Home>> = by_meter
        .par_iter()
        .map(|(&meter_id, rs)| {
            let (d, _) = build_sh_dataset(rs, &cfg.build).map_err(|e| HarnessError::stage("ingest", e))?;
            let (d, cleaned) = if cfg.clean {
                let c = clean_dataset(&d);
                (c.dataset, c.removed.len())
            } else {
                (d, 0)
            };
            let (train, valid) = split_train_validation(&d, cfg.seed).map_err(|e| HarnessError::stage("split", e))?;
            Ok(Home { meter_id, train, valid, cleaned })
        })
        .collect();
    let homes: Vec<Home> = homes.into_iter().collect::<Result<_>>()?;
    let (nbh_full, _) = build_nbh_dataset(&readings, &cfg.build);
    let (nbh_full, nbh_cleaned) = if cfg.clean {
        let c = clean_dataset(&nbh_full);
        (c.dataset, c.removed.len())
    } else {
        (nbh_full, 0)
    };
    let (nbh_train, nbh_valid) = split_train_validation(&nbh_full, cfg.seed).map_err(|e| HarnessError::stage("split", e))?;
    clock.lap("ingest");

    let sh_params = cfg.sh_model.with_seed(cfg.seed);
    let sh_models: Vec<Result<TreeModel>> = homes
        .par_iter()
        .map(|h| train_and_validate(&h.train, &h.valid, &sh_params).map_err(|e| HarnessError::stage("train", e)))
        .collect();
    let sh_models: Vec<TreeModel> = sh_models.into_iter().collect::<Result<_>>()?;
    let nbh_model = train_and_validate(&nbh_train, &nbh_valid, &cfg.nbh_model.with_seed(cfg.seed))
        .map_err(|e| HarnessError::stage("train", e))?;
    clock.lap("train");

    let mut benchmark: Vec<BenchmarkRow> = Vec::new();
    if cfg.benchmark {
        let splits: Vec<(Dataset, Dataset)> = homes.iter().map(|h| (h.train.clone(), h.valid.clone())).collect();
        let others = benchmark_models(&splits, &[other_learner(&cfg.sh_model, cfg.seed)])?;
        for (m, o) in sh_models.iter().zip(others) {
            benchmark.push(BenchmarkRow::from_model(o.meter_id, m));
            benchmark.push(o);
        }
        clock.lap("benchmark");
    }

    let sh_valid: Vec<Dataset> = homes.iter().map(|h| h.valid.clone()).collect();
    let sh_corpus = generate_corpus(&sh_valid, &cfg.attack_mix, &cfg.attack_specs, cfg.seed)
        .map_err(|e| HarnessError::stage("attack", e))?;
    let nbh_corpus = generate_corpus(std::slice::from_ref(&nbh_valid), &cfg.attack_mix, &cfg.attack_specs, cfg.seed)
        .map_err(|e| HarnessError::stage("attack", e))?;
    clock.lap("attack");

    let model_of: BTreeMap<u32, &TreeModel> = homes.iter().map(|h| h.meter_id).zip(&sh_models).collect();
    let sh_replays: Vec<Result<(Variant, Replay)>> = sh_corpus
        .entries
        .par_iter()
        .map(|e| {
            let meter = e.series.meter_id.unwrap_or(0);
            let model = model_of
                .get(&meter)
                .ok_or_else(|| HarnessError::stage("detect", format!("no model for meter {meter}")))?;
            let r = replay_sh(model, cfg.detector, &e.series).map_err(|e| HarnessError::stage("detect", e))?;
            Ok((e.variant, r))
        })
        .collect();
    let sh_replays: Vec<(Variant, Replay)> = sh_replays.into_iter().collect::<Result<_>>()?;
    let mut nbh_replays = Vec::new();
    for e in &nbh_corpus.entries {
        let r = replay_nbh(&nbh_model, &e.series).map_err(|e| HarnessError::stage("detect", e))?;
        nbh_replays.push((e.variant, r));
    }
    clock.lap("detect");

    let sh_by = group(&sh_replays);
    let nbh_by = group(&nbh_replays);
    let mut roc_curves = BTreeMap::new();
    let mut level_report = |level: Level, by: &BTreeMap<Variant, Vec<&Replay>>| -> LevelReport {
        let benign = score_variant(by.get(&Variant::Benign).map(Vec::as_slice).unwrap_or(&[]));
        let mut attacks = BTreeMap::new();
        for (v, rs) in by {
            if let Variant::Attack(t) = v {
                let (score, curve) = score_attack(rs, cfg.roc_points);
                if let Some(c) = curve {
                    roc_curves.insert((level, *t), c);
                }
                attacks.insert(*t, score);
            }
        }
        LevelReport { benign, attacks }
    };
    let sh = level_report(Level::Sh, &sh_by);
    let nbh = level_report(Level::Nbh, &nbh_by);

    let ticks: Vec<(NaiveDate, u8)> = nbh_valid.rows.iter().map(|r| (r.date, r.interval.index())).collect();
    let mut fusion = BTreeMap::new();
    let mut alerts = Vec::new();
    for (v, rs) in &sh_by {
        let nbh_r = nbh_by.get(v).and_then(|x| x.first().copied());
        let tag = v.as_str().to_string();
        for r in rs {
            alerts.extend(r.alerts.iter().map(|e| ScenarioAlert { variant: tag.clone(), event: e.clone() }));
        }
        if let Some(r) = nbh_r {
            alerts.extend(r.alerts.iter().map(|e| ScenarioAlert { variant: tag.clone(), event: e.clone() }));
        }
        let (score, confirmed) = fuse_variant(homes.len(), &ticks, rs, nbh_r);
        alerts.extend(confirmed.into_iter().map(|e| ScenarioAlert { variant: tag.clone(), event: e }));
        fusion.insert(tag, score);
    }
    clock.lap("score");

    let validation_days = {
        let mut days: Vec<NaiveDate> = nbh_valid.rows.iter().map(|r| r.date).collect();
        days.dedup();
        days.len()
    };
    let report = EvaluationReport {
        seed: cfg.seed,
        nb_sh: cfg.nb_sh,
        weeks: cfg.weeks,
        data: DataSummary {
            readings: readings.len(),
            sh_meters: homes.len(),
            sh_train_rows: homes.iter().map(|h| h.train.len()).sum(),
            sh_validation_rows: homes.iter().map(|h| h.valid.len()).sum(),
            sh_cleaned_rows: homes.iter().map(|h| h.cleaned).sum(),
            nbh_train_rows: nbh_train.len(),
            nbh_validation_rows: nbh_valid.len(),
            nbh_cleaned_rows: nbh_cleaned,
            validation_days,
        },
        models: summarize_models(&sh_models, &nbh_model),
        sh,
        nbh,
        fusion,
    };
    let mut timings = clock.laps;
    timings.insert("sh_train_seconds_total".into(), sh_models.iter().map(|m| m.meta.train_seconds).sum());
    timings.insert("nbh_train_seconds".into(), nbh_model.meta.train_seconds);
    Ok(ScenarioOutcome { report, alerts, roc_curves, benchmark, timings })
}

pub const DETECTION_HEADER: [&str; 14] = [
    "level",
    "attack_type",
    "intervals",
    "accuracy",
    "tpr",
    "fpr",
    "tnr",
    "fnr",
    "macro_tpr",
    "macro_fpr",
    "rmse",
    "rmse_a",
    "auc",
    "alerts",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn score_record(level: &str, variant: &str, s: &VariantScore, extra: Option<&AttackScore>) -> Vec<String> {
    let r = s.rates;
    let m = s.macro_rates.unwrap_or_default();
    vec![
        level.to_string(),
        variant.to_string(),
        s.intervals.to_string(),
        opt(r.accuracy),
        opt(r.tpr),
        opt(r.fpr),
        opt(r.tnr),
        opt(r.fnr),
        opt(m.tpr),
        opt(m.fpr),
        opt(extra.map(|a| a.rmse_benign)),
        opt(extra.map(|a| a.rmse_attack)),
        opt(extra.and_then(|a| a.auc)),
        s.alerts.to_string(),
    ]
}

/// Detection rates per level and attack type, one row each.
pub fn write_detection_csv<W: Write>(writer: W, report: &EvaluationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DETECTION_HEADER)?;
    for (name, level) in [("sh", &report.sh), ("nbh", &report.nbh)] {
        w.write_record(score_record(name, "none", &level.benign, None))?;
        for (t, a) in &level.attacks {
            w.write_record(score_record(name, t.as_str(), &a.score, Some(a)))?;
        }
    }
    for (v, s) in &report.fusion {
        w.write_record(score_record("fusion", v, s, None))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_roc_csv<W: Write>(writer: W, curve: &RocCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["fpr", "tpr"])?;
    for (f, t) in &curve.points {
        w.write_record([format!("{f:.6}"), format!("{t:.6}")])?;
    }
    w.flush()?;
    Ok(())
}
