use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gridguard::attacks::{generate_corpus, write_corpus_csv, AttackMix, AttackType};
use gridguard::detect::{
    gradual_overload_check, interval_start, write_alerts_jsonl, AlertEvent, DecisionMaker, NbhDetector,
    ShDetector, SlopeReport, SlopeThreshold,
};
use gridguard::harness::{
    run_scenario, write_benchmark_csv, write_detection_csv, write_roc_csv, BenchmarkRow, EvaluationReport,
    VariantScore,
};
use gridguard::ingest::{
    build_nbh_dataset, build_sh_dataset, clean_dataset, group_by_meter, open_raw, parse_raw, read_datasets_csv,
    split_train_validation, write_datasets_csv, write_rows_csv, Dataset, FeatureVector, Interval, Level,
};
use gridguard::models::{deserialize, serialize, train_and_validate, TreeModel};
use rayon::prelude::*;
use serde::Serialize;

use crate::manifest::Run;
use crate::{require, user, AttackArg, Ctx, LevelArg};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn wants(level: Option<LevelArg>, l: Level) -> bool {
    match level {
        None => true,
        Some(LevelArg::Sh) => l == Level::Sh,
        Some(LevelArg::Nbh) => l == Level::Nbh,
    }
}

fn read_csv(ctx: &Ctx, path: &Path) -> Result<Vec<Dataset>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_datasets_csv(f, ctx.config.build.sh_attributes()).with_context(|| format!("reading {}", path.display()))
}

fn keep(d: &Dataset, meter: Option<u32>, level: Option<LevelArg>) -> bool {
    wants(level, d.level) && (meter.is_none() || d.level == Level::Nbh || d.meter_id == meter)
}

#[derive(Serialize)]
struct CleaningEntry {
    level: Level,
    meter_id: Option<u32>,
    rows: usize,
    removed: usize,
    flagged_intervals: usize,
    duplicates: usize,
}

#[derive(Serialize)]
struct IngestReport {
    readings: usize,
    parse_errors: usize,
    first_errors: Vec<String>,
    skipped_blank: usize,
    datasets: Vec<CleaningEntry>,
}

pub fn ingest(
    ctx: &Ctx,
    raw: &Path,
    meter: Option<u32>,
    level: Option<LevelArg>,
    split: bool,
    max_parse_errors: usize,
) -> Result<()> {
    require(raw, "raw meter file")?;
    let mut run = Run::start("ingest", &ctx.out, &ctx.config, &[raw])?;
    let parsed = parse_raw(open_raw(raw)?)?;
    let first_errors: Vec<String> = parsed
        .issues
        .iter()
        .take(20)
        .map(|i| format!("line {}: {}", i.line, i.message))
        .collect();
    if parsed.issues.len() > max_parse_errors {
        return Err(user(format!(
            "{} malformed lines exceed --max-parse-errors {max_parse_errors}; first: {}",
            parsed.issues.len(),
            first_errors.first().cloned().unwrap_or_default()
        )));
    }
    let mut readings = parsed.readings;
    if let Some(m) = meter {
        readings.retain(|r| r.meter_id == m);
        if readings.is_empty() {
            return Err(user(format!("meter {m} has no readings in {}", raw.display())));
        }
    }
    run.lap("parse");

    let opts = ctx.config.build;
    let mut built: Vec<(Dataset, CleaningEntry)> = Vec::new();
    if wants(level, Level::Sh) {
        let groups = group_by_meter(&readings);
        let homes: Vec<Result<(Dataset, CleaningEntry)>> = groups
            .par_iter()
            .map(|(&m, rs)| {
                let (d, rep) = build_sh_dataset(rs, &opts)?;
                let c = clean_dataset(&d);
                let entry = CleaningEntry {
                    level: Level::Sh,
                    meter_id: Some(m),
                    rows: c.dataset.len(),
                    removed: c.removed.len(),
                    flagged_intervals: rep.flagged.len(),
                    duplicates: rep.duplicates,
                };
                Ok((c.dataset, entry))
            })
            .collect();
        for h in homes {
            built.push(h?);
        }
    }
    if wants(level, Level::Nbh) && meter.is_none() {
        let (d, rep) = build_nbh_dataset(&readings, &opts);
        let c = clean_dataset(&d);
        let entry = CleaningEntry {
            level: Level::Nbh,
            meter_id: None,
            rows: c.dataset.len(),
            removed: c.removed.len(),
            flagged_intervals: rep.flagged.len(),
            duplicates: rep.duplicates,
        };
        built.push((c.dataset, entry));
    }
    run.lap("build");

    // Split before writing so a failed split leaves no partial output.
    let splits = if split {
        let mut v = Vec::new();
        for (d, _) in &built {
            let s = split_train_validation(d, ctx.config.seed).map_err(|e| {
                let who = d.meter_id.map_or("nbh".to_string(), |m| format!("meter {m}"));
                user(format!("split failed for {who}: {e}"))
            })?;
            v.push(s);
        }
        Some(v)
    } else {
        None
    };

    for l in [Level::Sh, Level::Nbh] {
        let of_level: Vec<&Dataset> = built.iter().map(|(d, _)| d).filter(|d| d.level == l).collect();
        if of_level.is_empty() {
            continue;
        }
        write_datasets_csv(create(&run.path(&format!("{}.csv", l.as_str())))?, of_level)?;
        if let Some(s) = &splits {
            let pairs: Vec<&(Dataset, Dataset)> = s.iter().filter(|(t, _)| t.level == l).collect();
            write_datasets_csv(create(&run.path(&format!("{}_train.csv", l.as_str())))?, pairs.iter().map(|p| &p.0))?;
            write_datasets_csv(create(&run.path(&format!("{}_valid.csv", l.as_str())))?, pairs.iter().map(|p| &p.1))?;
        }
    }
    let report = IngestReport {
        readings: readings.len(),
        parse_errors: parsed.issues.len(),
        first_errors,
        skipped_blank: parsed.skipped_blank,
        datasets: built.into_iter().map(|(_, e)| e).collect(),
    };
    write_json(&run.path("cleaning_report.json"), &report)?;
    run.lap("write");
    run.finish()?;
    Ok(())
}

/// (train, validation) pairs from an ingest directory: the written split if
/// present, otherwise a fresh split of the full datasets.
fn load_splits(ctx: &Ctx, data: &Path, l: Level) -> Result<Option<Vec<(Dataset, Dataset)>>> {
    let name = l.as_str();
    let (train_p, valid_p, full_p) = (
        data.join(format!("{name}_train.csv")),
        data.join(format!("{name}_valid.csv")),
        data.join(format!("{name}.csv")),
    );
    if train_p.exists() && valid_p.exists() {
        let train = read_csv(ctx, &train_p)?;
        let valid: BTreeMap<Option<u32>, Dataset> = read_csv(ctx, &valid_p)?.into_iter().map(|d| (d.meter_id, d)).collect();
        let mut out = Vec::new();
        for t in train {
            let v = valid
                .get(&t.meter_id)
                .cloned()
                .ok_or_else(|| user(format!("{} has no validation rows for {:?}", valid_p.display(), t.meter_id)))?;
            out.push((t, v));
        }
        return Ok(Some(out));
    }
    if !full_p.exists() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for d in read_csv(ctx, &full_p)? {
        out.push(split_train_validation(&d, ctx.config.seed).map_err(|e| user(format!("split: {e}")))?);
    }
    Ok(Some(out))
}

pub fn model_file(level: Level, meter: Option<u32>) -> String {
    match (level, meter) {
        (Level::Sh, Some(m)) => format!("sh_{m}.amim"),
        _ => "nbh.amim".to_string(),
    }
}

pub fn train(ctx: &Ctx, data: &Path, meter: Option<u32>, level: Option<LevelArg>) -> Result<()> {
    require(data, "ingest directory")?;
    let mut run = Run::start("train", &ctx.out, &ctx.config, &[data])?;
    let mut jobs: Vec<(Dataset, Dataset)> = Vec::new();
    for l in [Level::Sh, Level::Nbh] {
        if !wants(level, l) || (l == Level::Nbh && meter.is_some()) {
            continue;
        }
        match load_splits(ctx, data, l)? {
            Some(pairs) => jobs.extend(pairs.into_iter().filter(|(t, _)| keep(t, meter, level))),
            None if level.is_some() => {
                return Err(user(format!("missing input: {}/{}.csv (run ingest first)", data.display(), l.as_str())))
            }
            None => {}
        }
    }
    if jobs.is_empty() {
        return Err(user(format!("no datasets to train in {}", data.display())));
    }
    run.lap("load");

    let seed = ctx.config.seed;
    let trained: Vec<Result<TreeModel>> = jobs
        .par_iter()
        .map(|(t, v)| {
            let params = match t.level {
                Level::Sh => ctx.config.sh_model.with_seed(seed),
                Level::Nbh => ctx.config.nbh_model.with_seed(seed),
            };
            train_and_validate(t, v, &params).with_context(|| format!("training {}", model_file(t.level, t.meter_id)))
        })
        .collect();
    let mut rows = Vec::new();
    let mut sh_seconds = 0.0;
    for ((t, _), m) in jobs.iter().zip(trained) {
        let m = m?;
        fs::write(run.path(&model_file(t.level, t.meter_id)), serialize(&m))?;
        if t.level == Level::Sh {
            sh_seconds += m.meta.train_seconds;
        }
        rows.push(BenchmarkRow::from_model(t.meter_id, &m));
    }
    run.lap("train");
    write_benchmark_csv(create(&run.path("benchmark.csv"))?, &rows)?;
    run.add_seconds(&[("sh_train_seconds_total".to_string(), sh_seconds)].into_iter().collect());
    run.finish()?;
    Ok(())
}

fn choose_mix(ctx: &Ctx, attack: Option<AttackArg>) -> AttackMix {
    let one = |t: AttackType| [(t, 1.0)].into_iter().collect();
    match attack {
        None => ctx.config.attack_mix.clone(),
        Some(AttackArg::All) => AttackType::ALL.iter().map(|&t| (t, 1.0)).collect(),
        Some(AttackArg::T1) => one(AttackType::T1Peak),
        Some(AttackArg::T2) => one(AttackType::T2BillReduction),
        Some(AttackArg::T3) => one(AttackType::T3Sharp),
        Some(AttackArg::T4) => one(AttackType::T4Fluctuation),
    }
}

pub fn attack(ctx: &Ctx, data: &Path, attack: Option<AttackArg>, meter: Option<u32>, level: Option<LevelArg>) -> Result<()> {
    require(data, "ingest directory")?;
    let mut run = Run::start("attack", &ctx.out, &ctx.config, &[data])?;
    let mut datasets = Vec::new();
    for l in [Level::Sh, Level::Nbh] {
        if !wants(level, l) {
            continue;
        }
        let valid = data.join(format!("{}_valid.csv", l.as_str()));
        let full = data.join(format!("{}.csv", l.as_str()));
        let path = if valid.exists() { valid } else { full };
        if path.exists() {
            datasets.extend(read_csv(ctx, &path)?.into_iter().filter(|d| keep(d, meter, level)));
        }
    }
    if datasets.is_empty() {
        return Err(user(format!("missing input: no sh/nbh dataset CSV in {}", data.display())));
    }
    run.lap("load");
    let mix = choose_mix(ctx, attack);
    let corpus = generate_corpus(&datasets, &mix, &ctx.config.attack_specs, ctx.config.seed)
        .map_err(|e| user(format!("attack: {e}")))?;
    run.lap("inject");
    write_corpus_csv(create(&run.path("corpus.csv"))?, &corpus)?;
    let mut by_variant: BTreeMap<&str, Vec<(Level, Option<u32>, FeatureVector, &str)>> = BTreeMap::new();
    for e in &corpus.entries {
        let rows = by_variant.entry(e.variant.as_str()).or_default();
        for (r, l) in e.series.attacked_rows().zip(&e.series.labels) {
            rows.push((e.series.level, e.series.meter_id, r, l.as_str()));
        }
    }
    for (v, rows) in &by_variant {
        write_rows_csv(
            create(&run.path(&format!("streams_{v}.csv")))?,
            rows.iter().map(|(l, m, r, lab)| (*l, *m, r, *lab)),
        )?;
    }
    run.lap("write");
    run.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct StreamSummary {
    level: Level,
    meter_id: Option<u32>,
    rows: usize,
    flagged: usize,
    alerts: usize,
    pe: f64,
    /// Gradual overloading check on daily totals; absent under 28 days.
    overload: Option<SlopeReport>,
}

struct StreamResult {
    summary: StreamSummary,
    alerts: Vec<AlertEvent>,
    suspects: Vec<FeatureVector>,
    benign: Vec<FeatureVector>,
}

const OVERLOAD_MIN_DAYS: usize = 28;

fn overload(d: &Dataset, pe: f64) -> Option<SlopeReport> {
    let mut days: BTreeMap<chrono::NaiveDate, f64> = BTreeMap::new();
    for r in &d.rows {
        *days.entry(r.date).or_default() += r.consumption;
    }
    let totals: Vec<f64> = days.into_values().collect();
    // Daily-total error from the hourly one, assuming independent hours.
    let daily_pe = pe * f64::from(d.level.intervals_per_day()).sqrt();
    gradual_overload_check(&totals, OVERLOAD_MIN_DAYS, SlopeThreshold::Drift { pe: daily_pe }).ok()
}

fn load_model(dir: &Path, level: Level, meter: Option<u32>) -> Result<TreeModel> {
    let path = dir.join(model_file(level, meter));
    require(&path, "model file")?;
    let bytes = fs::read(&path)?;
    deserialize(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn detect_stream(ctx: &Ctx, models: &Path, d: &Dataset) -> Result<StreamResult> {
    let model = load_model(models, d.level, d.meter_id)?;
    let pe = model.trained_rmse;
    let (mut alerts, mut flagged) = (Vec::new(), 0);
    let (suspects, benign) = match d.level {
        Level::Sh => {
            let mut det = ShDetector::new(d.meter_id.unwrap_or(0), model, ctx.config.detector);
            for r in &d.rows {
                let out = det.step(r).map_err(|e| user(format!("meter {:?}: {e}", d.meter_id)))?;
                flagged += usize::from(out.flagged);
                alerts.extend(out.alert);
            }
            (det.suspects, det.benign_buffer)
        }
        Level::Nbh => {
            let mut det = NbhDetector::new(model);
            for r in &d.rows {
                let out = det.step(r).map_err(|e| user(format!("nbh: {e}")))?;
                flagged += usize::from(out.flagged);
                alerts.extend(out.alert);
            }
            (det.suspect_store, det.benign_buffer)
        }
    };
    Ok(StreamResult {
        summary: StreamSummary {
            level: d.level,
            meter_id: d.meter_id,
            rows: d.len(),
            flagged,
            alerts: alerts.len(),
            pe,
            overload: overload(d, pe),
        },
        alerts,
        suspects,
        benign,
    })
}

#[derive(Serialize)]
struct DetectSummary {
    streams: Vec<StreamSummary>,
    sh_alerts: usize,
    nacr_alerts: usize,
    confirmed: usize,
}

pub fn detect(ctx: &Ctx, input: &Path, models: &Path, meter: Option<u32>, level: Option<LevelArg>) -> Result<()> {
    require(input, "dataset CSV")?;
    require(models, "model directory")?;
    let mut run = Run::start("detect", &ctx.out, &ctx.config, &[input, models])?;
    let datasets: Vec<Dataset> = read_csv(ctx, input)?.into_iter().filter(|d| keep(d, meter, level)).collect();
    if datasets.is_empty() {
        return Err(user(format!("{} holds no matching streams", input.display())));
    }
    run.lap("load");
    let results: Vec<Result<StreamResult>> = datasets.par_iter().map(|d| detect_stream(ctx, models, d)).collect();
    let results: Vec<StreamResult> = results.into_iter().collect::<Result<_>>()?;
    run.lap("detect");

    let sh: Vec<&StreamResult> = results.iter().filter(|r| r.summary.level == Level::Sh).collect();
    let nbh = results.iter().find(|r| r.summary.level == Level::Nbh);
    let mut log: Vec<AlertEvent> = results.iter().flat_map(|r| r.alerts.iter().cloned()).collect();

    // Fusion runs on the NBH clock when both levels are present.
    let mut confirmed_hours = std::collections::BTreeSet::new();
    let mut dm = DecisionMaker::new(sh.len());
    if let (Some(n), false) = (nbh, sh.is_empty()) {
        let mut sh_alerts: BTreeMap<(chrono::NaiveDate, u8), usize> = BTreeMap::new();
        for r in &sh {
            for a in &r.alerts {
                *sh_alerts.entry((a.timestamp.date(), a.interval)).or_default() += 1;
            }
        }
        let nacr: BTreeMap<(chrono::NaiveDate, u8), &AlertEvent> =
            n.alerts.iter().map(|a| ((a.timestamp.date(), a.interval), a)).collect();
        let nbh_rows = datasets.iter().find(|d| d.level == Level::Nbh).map(|d| d.rows.as_slice()).unwrap_or(&[]);
        for row in nbh_rows {
            let slot = row.interval.index();
            let hour = (row.date, slot.div_ceil(2));
            let count = sh_alerts.get(&hour).copied().unwrap_or(0);
            let ts = interval_start(row.date, Interval::Slot(slot));
            if dm.fuse(ts, slot, nacr.get(&(row.date, slot)).copied(), count).is_some() {
                confirmed_hours.insert(hour);
            }
        }
        log.extend(dm.operator_log.iter().cloned());
    }
    for r in &sh {
        let (hit, miss): (Vec<FeatureVector>, Vec<FeatureVector>) = r
            .suspects
            .iter()
            .partition(|f| confirmed_hours.contains(&(f.date, f.interval.index())));
        dm.route(hit.into_iter().map(|f| (Level::Sh, r.summary.meter_id, f)), true);
        dm.route(miss.into_iter().map(|f| (Level::Sh, r.summary.meter_id, f)), false);
    }
    write_alerts_jsonl(create(&run.path("alerts.jsonl"))?, &log)?;
    write_rows_csv(
        create(&run.path("suspects.csv"))?,
        results
            .iter()
            .flat_map(|r| r.suspects.iter().map(move |f| (r.summary.level, r.summary.meter_id, f, "suspect"))),
    )?;
    write_rows_csv(
        create(&run.path("benign.csv"))?,
        results
            .iter()
            .flat_map(|r| r.benign.iter().map(move |f| (r.summary.level, r.summary.meter_id, f, "benign"))),
    )?;
    if nbh.is_some() && !sh.is_empty() {
        write_rows_csv(
            create(&run.path("attack.csv"))?,
            dm.attack_rows.iter().map(|(l, m, f)| (*l, *m, f, "attack")),
        )?;
    }
    let summary = DetectSummary {
        sh_alerts: sh.iter().map(|r| r.alerts.len()).sum(),
        nacr_alerts: nbh.map_or(0, |r| r.alerts.len()),
        confirmed: dm.operator_log.len(),
        streams: results.into_iter().map(|r| r.summary).collect(),
    };
    write_json(&run.path("detect_summary.json"), &summary)?;
    run.lap("write");
    run.finish()?;
    Ok(())
}

pub const REPORT_FILE: &str = "report.json";

pub fn simulate(ctx: &Ctx) -> Result<()> {
    let mut run = Run::start("simulate", &ctx.out, &ctx.config, &[])?;
    let outcome = run_scenario(&ctx.config)?;
    run.lap("scenario");
    write_json(&run.path(REPORT_FILE), &outcome.report)?;
    write_alerts_jsonl(create(&run.path("alerts.jsonl"))?, outcome.alerts.iter().map(|a| &a.event))?;
    {
        let mut w = create(&run.path("alerts_tagged.jsonl"))?;
        for a in &outcome.alerts {
            serde_json::to_writer(&mut w, a)?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    write_detection_csv(create(&run.path("detection.csv"))?, &outcome.report)?;
    if !outcome.benchmark.is_empty() {
        write_benchmark_csv(create(&run.path("benchmark.csv"))?, &outcome.benchmark)?;
    }
    for ((level, t), curve) in &outcome.roc_curves {
        write_roc_csv(create(&run.path(&format!("roc_{}_{}.csv", level.as_str(), t.as_str())))?, curve)?;
    }
    write_json(&run.path("timings.json"), &outcome.timings)?;
    run.lap("write");
    run.add_seconds(&outcome.timings);
    run.finish()?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn rate_fields(s: &VariantScore) -> Vec<String> {
    let r = s.rates;
    [r.accuracy, r.tpr, r.fpr, r.tnr, r.fnr].into_iter().map(fmt_opt).collect()
}

fn write_level_table(path: PathBuf, level: &gridguard::harness::LevelReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["attack_type", "accuracy", "tpr", "fpr", "tnr", "fnr", "rmse", "rmse_a", "auc"])?;
    for (t, a) in &level.attacks {
        let mut rec = vec![t.as_str().to_string()];
        rec.extend(rate_fields(&a.score));
        rec.extend([fmt_opt(Some(a.rmse_benign)), fmt_opt(Some(a.rmse_attack)), fmt_opt(a.auc)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Default)]
struct LearnerTotals {
    n: usize,
    mae: f64,
    rmse: f64,
    seconds: f64,
    bytes: f64,
}

pub fn report(ctx: &Ctx, run_dir: &Path) -> Result<()> {
    let report_path = run_dir.join(REPORT_FILE);
    require(&report_path, "simulate report")?;
    let mut run = Run::start("report", &ctx.out, &ctx.config, &[run_dir])?;
    let text = fs::read_to_string(&report_path)?;
    let report: EvaluationReport =
        serde_json::from_str(&text).map_err(|e| user(format!("{}: {e}", report_path.display())))?;

    write_level_table(run.path("sh_detection.csv"), &report.sh)?;
    write_level_table(run.path("nbh_detection.csv"), &report.nbh)?;
    {
        let mut w = csv::Writer::from_writer(create(&run.path("fusion.csv"))?);
        w.write_record(["attack_type", "accuracy", "tpr", "fpr", "tnr", "fnr", "confirmed"])?;
        for (v, s) in &report.fusion {
            let mut rec = vec![v.clone()];
            rec.extend(rate_fields(s));
            rec.push(s.alerts.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
    }

    // Per-learner means over the homes of the benchmark table.
    let bench = run_dir.join("benchmark.csv");
    let mut totals: BTreeMap<String, LearnerTotals> = BTreeMap::new();
    if bench.exists() {
        let mut rdr = csv::Reader::from_path(&bench)?;
        for row in rdr.deserialize::<BenchmarkRow>() {
            let row = row.with_context(|| format!("reading {}", bench.display()))?;
            let t = totals.entry(row.kind.as_str().to_string()).or_default();
            t.n += 1;
            t.mae += row.mae;
            t.rmse += row.rmse;
            t.seconds += row.train_seconds;
            t.bytes += row.model_bytes as f64;
        }
    } else {
        totals.insert(
            report.models.sh_kind.clone(),
            LearnerTotals {
                n: 1,
                mae: report.models.sh_mae_mean,
                rmse: report.models.sh_rmse_mean,
                seconds: f64::NAN,
                bytes: report.models.sh_model_bytes_mean,
            },
        );
    }
    let mut w = csv::Writer::from_writer(create(&run.path("learners.csv"))?);
    w.write_record(["kind", "models", "mae", "rmse", "train_seconds", "model_kb"])?;
    for (kind, t) in &totals {
        let n = t.n as f64;
        let secs = t.seconds / n;
        w.write_record([
            kind.clone(),
            t.n.to_string(),
            format!("{:.3}", t.mae / n),
            format!("{:.3}", t.rmse / n),
            if secs.is_finite() { format!("{secs:.4}") } else { String::new() },
            format!("{:.2}", t.bytes / n / 1024.0),
        ])?;
    }
    w.flush()?;
    drop(w);
    run.lap("write");
    run.finish()?;
    Ok(())
}
