//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary so
//! the lines are printed whatever the outcome; exits non-zero on any FAIL.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use gridguard::attacks::AttackType;
use gridguard::detect::{decide, sh_step, DetectorParams, ShDetector};
use gridguard::harness::{run_scenario, synth_generate, write_raw, Confusion, ScenarioConfig, ScenarioOutcome, SynthProfile};
use gridguard::ingest::{
    build_sh_dataset, group_by_meter, Attribute, AttributeSet, BuildOptions, Dataset, FeatureVector, Interval, Level,
};
use gridguard::models::{best_split, train, train_rep_tree, ModelKind, ModelParams, RepTreeParams, TreeModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, detail: String) -> Check {
    let s = elapsed.as_secs_f64();
    ensure(s < limit_s, format!("{detail}; {s:.2}s (limit {limit_s}s)"))
}

// 1. Split criterion against exhaustive enumeration.

fn pop_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

fn sd_reduction(all: &[f64], left: &[f64], right: &[f64]) -> Option<f64> {
    if left.is_empty() || right.is_empty() {
        return None;
    }
    let n = all.len() as f64;
    Some(pop_sd(all) - left.len() as f64 / n * pop_sd(left) - right.len() as f64 / n * pop_sd(right))
}

fn brute_force_gain(rows: &[FeatureVector], attrs: AttributeSet) -> Option<f64> {
    let ys: Vec<f64> = rows.iter().map(|r| r.consumption).collect();
    let mut best: Option<f64> = None;
    for a in attrs.iter() {
        let mut codes: Vec<u8> = rows.iter().map(|r| r.code(a)).collect();
        codes.sort_unstable();
        codes.dedup();
        let partitions: Vec<Box<dyn Fn(u8) -> bool>> = if a == Attribute::Season {
            (1..(1u32 << codes.len()) - 1)
                .map(|mask| {
                    let codes = codes.clone();
                    Box::new(move |c: u8| mask & (1 << codes.iter().position(|&x| x == c).unwrap()) != 0)
                        as Box<dyn Fn(u8) -> bool>
                })
                .collect()
        } else {
            codes.iter().map(|&t| Box::new(move |c: u8| c <= t) as Box<dyn Fn(u8) -> bool>).collect()
        };
        for goes_left in partitions {
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for row in rows {
                if goes_left(row.code(a)) {
                    l.push(row.consumption);
                } else {
                    r.push(row.consumption);
                }
            }
            if let Some(g) = sd_reduction(&ys, &l, &r) {
                best = Some(best.map_or(g, |b: f64| b.max(g)));
            }
        }
    }
    best
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize) -> Vec<FeatureVector> {
    let start = NaiveDate::from_ymd_opt(2009, 1, 1).unwrap();
    (0..n)
        .map(|_| {
            let date = start + Days::new(rng.random_range(0..730));
            let interval = if rng.random_bool(0.5) {
                Interval::Hour(rng.random_range(1..=24))
            } else {
                Interval::Slot(rng.random_range(1..=48))
            };
            let y = if rng.random_bool(0.3) { f64::from(rng.random_range(0..4u8)) } else { rng.random_range(0.0..5.0) };
            FeatureVector::new(date, interval, y)
        })
        .collect()
}

fn criterion_1() -> Check {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let n = rng.random_range(2..=200);
        let rows = random_rows(&mut rng, n);
        let idx: Vec<usize> = (0..n).collect();
        let got = best_split(&rows, &idx, AttributeSet::all(), 1).map(|c| c.gain);
        match (got, brute_force_gain(&rows, AttributeSet::all())) {
            (Some(g), Some(w)) => worst = worst.max((g - w).abs()),
            (None, None) => {}
            other => return Err(format!("case {case}: {other:?}")),
        }
    }
    if worst > 1e-9 {
        return Err(format!("max gain difference {worst:e}"));
    }
    within(clock.elapsed(), 10.0, format!("100 datasets, max gain difference {worst:e}"))
}

// 2. Reduced-error pruning never raises holdout RMSE.

fn criterion_2() -> Check {
    let mut steps = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.random_range(100..600);
        let mut d = Dataset::new(Level::Sh, Some(1), AttributeSet::sh_default());
        d.rows = random_rows(&mut rng, n)
            .into_iter()
            .map(|mut r| {
                r.interval = Interval::Hour(rng.random_range(1..=24));
                r
            })
            .collect();
        let m = train_rep_tree(&d, &RepTreeParams { seed, ..Default::default() }).map_err(|e| e.to_string())?;
        let trace = &m.meta.prune_trace;
        if trace.is_empty() {
            return Err(format!("seed {seed}: no prune trace"));
        }
        if let Some(w) = trace.windows(2).find(|w| w[1] > w[0] + 1e-12) {
            return Err(format!("seed {seed}: holdout rmse rose {} -> {}", w[0], w[1]));
        }
        steps += trace.len() - 1;
    }
    Ok(format!("50 trainings, {steps} prune steps, none raised holdout rmse"))
}

// 3. Model tree vs rep tree validation RMSE per meter.

fn criterion_3() -> Check {
    let clock = Instant::now();
    let cfg = ScenarioConfig {
        nb_sh: 50,
        weeks: 8,
        seed: 7,
        benchmark: true,
        ..Default::default()
    };
    let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let mut wins = 0;
    for pair in out.benchmark.chunks(2) {
        let [mt, rep] = pair else { return Err("unpaired benchmark rows".into()) };
        if (mt.kind, rep.kind) != (ModelKind::ModelTree, ModelKind::RepTree) || mt.meter_id != rep.meter_id {
            return Err(format!("unexpected pairing {:?}/{:?}", mt.kind, rep.kind));
        }
        wins += usize::from(mt.rmse <= rep.rmse);
    }
    if out.benchmark.len() != 100 {
        return Err(format!("{} benchmark rows", out.benchmark.len()));
    }
    if wins < 45 {
        return Err(format!("model tree better on {wins}/50 meters"));
    }
    within(clock.elapsed(), 120.0, format!("model tree rmse <= rep tree on {wins}/50 meters"))
}

// 4 to 6. Detection rates and RMSE separation, 50 homes, 4 validation weeks.

fn detection_scenario() -> Result<(ScenarioOutcome, Duration), String> {
    let clock = Instant::now();
    let cfg = ScenarioConfig {
        nb_sh: 50,
        weeks: 16,
        seed: 7,
        benchmark: false,
        ..Default::default()
    };
    let out = run_scenario(&cfg).map_err(|e| e.to_string())?;
    Ok((out, clock.elapsed()))
}

const TYPES: [AttackType; 4] = [AttackType::T1Peak, AttackType::T2BillReduction, AttackType::T3Sharp, AttackType::T4Fluctuation];

fn rate_check(out: &ScenarioOutcome, level: Level, min_tpr: impl Fn(AttackType) -> Option<f64>) -> Check {
    let report = match level {
        Level::Sh => &out.report.sh,
        Level::Nbh => &out.report.nbh,
    };
    let mut parts = Vec::new();
    let mut ok = true;
    for t in TYPES {
        let Some(need) = min_tpr(t) else { continue };
        let Some(a) = report.attacks.get(&t) else { return Err(format!("{t} missing")) };
        let (tpr, fpr) = (a.score.rates.tpr.unwrap_or(0.0), a.score.rates.fpr.unwrap_or(1.0));
        ok &= tpr >= need && fpr <= 0.20;
        parts.push(format!("{t} tpr {tpr:.3} (>= {need}) fpr {fpr:.3}"));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_4(out: &ScenarioOutcome, elapsed: Duration) -> Check {
    let detail = rate_check(out, Level::Sh, |t| {
        Some(if matches!(t, AttackType::T3Sharp | AttackType::T4Fluctuation) { 0.95 } else { 0.85 })
    })?;
    within(elapsed, 300.0, detail)
}

fn criterion_5(out: &ScenarioOutcome) -> Check {
    rate_check(out, Level::Nbh, |t| matches!(t, AttackType::T3Sharp | AttackType::T4Fluctuation).then_some(0.95))
}

fn criterion_6(out: &ScenarioOutcome) -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, level) in [("sh", &out.report.sh), ("nbh", &out.report.nbh)] {
        for t in TYPES {
            let Some(a) = level.attacks.get(&t) else { return Err(format!("{name} {t} missing")) };
            let need = if matches!(t, AttackType::T3Sharp | AttackType::T4Fluctuation) { 2.0 } else { 1.3 };
            let ratio = a.rmse_attack / a.rmse_benign;
            ok &= ratio >= need;
            parts.push(format!("{name} {t} {ratio:.2}"));
        }
    }
    ensure(ok, parts.join(", "))
}

// 7. Alert timing of the home detector against a direct window scan.

/// Alert at t when t is flagged and more than `nbr_incr` of the intervals in
/// the last `n_window`, counting only those after the previous alert, are
/// flagged.
fn reference_alerts(flags: &[bool], nbr_incr: usize, n_window: usize) -> Vec<usize> {
    let mut alerts = Vec::new();
    let mut since = 0;
    for t in 0..flags.len() {
        let lo = since.max((t + 1).saturating_sub(n_window));
        let count = flags[lo..=t].iter().filter(|&&f| f).count();
        if flags[t] && count > nbr_incr {
            alerts.push(t);
            since = t + 1;
        }
    }
    alerts
}

fn criterion_7() -> Check {
    let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap();
    let mut model = TreeModel::leaf(ModelKind::RepTree, AttributeSet::sh_default(), 1.0, 1);
    model.trained_rmse = 0.5;
    let mut checked = 0;
    for (nbr_incr, n_window) in [(2, 4), (1, 3), (2, 6), (3, 5), (0, 1)] {
        let params = DetectorParams { nbr_incr, n_window, ..Default::default() };
        for bits in 0u32..1 << 12 {
            let flags: Vec<bool> = (0..12).map(|i| bits & (1 << i) != 0).collect();
            let mut det = ShDetector::new(1, model.clone(), params);
            let mut got = Vec::new();
            for (t, &f) in flags.iter().enumerate() {
                let row = FeatureVector::new(start, Interval::Hour(t as u8 + 1), if f { 2.0 } else { 1.0 });
                if sh_step(&mut det, &row).map_err(|e| e.to_string())?.is_some() {
                    got.push(t);
                }
            }
            let want = reference_alerts(&flags, nbr_incr, n_window);
            if got != want {
                return Err(format!("nbr_incr {nbr_incr} n_window {n_window} flags {bits:012b}: {got:?} vs {want:?}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} sequences over 5 parameter pairs, all 2^12 per pair"))
}

// 8. Fusion rule.

fn criterion_8() -> Check {
    let mut cases = 0;
    for nb_sh in 1..=8usize {
        for nb_alert in 0..=nb_sh {
            for nacr in [false, true] {
                let want = nacr || nb_alert as f64 > nb_sh as f64 / 2.0;
                if decide(nacr, nb_alert, nb_sh) != want {
                    return Err(format!("nacr {nacr} nb_alert {nb_alert} nb_sh {nb_sh}"));
                }
                cases += 1;
            }
        }
    }
    let boundary = [(false, 250, false), (false, 251, true), (true, 250, true), (true, 0, true)];
    for (nacr, nb_alert, want) in boundary {
        if decide(nacr, nb_alert, 500) != want {
            return Err(format!("nacr {nacr} nb_alert {nb_alert} of 500"));
        }
    }
    Ok(format!("{cases} exhaustive cases plus 250/251 of 500"))
}

// 9. Confusion fixture.

fn criterion_9() -> Check {
    let r = Confusion::new(918, 82, 104, 896).rates();
    ensure(
        r.tpr == Some(0.918) && r.fpr == Some(0.104),
        format!("tpr {:?} fpr {:?}", r.tpr, r.fpr),
    )
}

// 10. Training speed, single model and fleet.

fn gridguard(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_gridguard")).args(args).output().map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("gridguard {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim()))
    }
}

fn criterion_10() -> Check {
    let readings = synth_generate(&SynthProfile::default(), 5, 3, 7).map_err(|e| e.to_string())?;
    let mut slowest: f64 = 0.0;
    for rs in group_by_meter(&readings).values() {
        let (d, _) = build_sh_dataset(rs, &BuildOptions::default()).map_err(|e| e.to_string())?;
        for params in [ScenarioConfig::default().sh_model, ModelParams::RepTree(RepTreeParams::default())] {
            let clock = Instant::now();
            train(&d, &params).map_err(|e| e.to_string())?;
            slowest = slowest.max(clock.elapsed().as_secs_f64());
        }
    }
    if slowest >= 2.0 {
        return Err(format!("slowest 3-week model took {slowest:.3}s"));
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let raw = dir.path().join("fleet.txt");
    let fleet = synth_generate(&SynthProfile::default(), 500, 4, 7).map_err(|e| e.to_string())?;
    write_raw(fs::File::create(&raw).map_err(|e| e.to_string())?, &fleet).map_err(|e| e.to_string())?;
    let data = dir.path().join("data");
    let models = dir.path().join("models");
    let s = |p: &Path| p.to_string_lossy().into_owned();
    gridguard(&["--jobs", "4", "--out", &s(&data), "ingest", &s(&raw), "--split"])?;
    let clock = Instant::now();
    gridguard(&["--jobs", "4", "--out", &s(&models), "train", "--data", &s(&data)])?;
    let fleet_time = clock.elapsed();

    let mut reader = csv::Reader::from_path(models.join("benchmark.csv")).map_err(|e| e.to_string())?;
    let col = reader.headers().map_err(|e| e.to_string())?.iter().position(|h| h == "train_seconds").ok_or("no train_seconds column")?;
    let mut rows = 0;
    let mut slowest_fleet: f64 = 0.0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        slowest_fleet = slowest_fleet.max(rec[col].parse::<f64>().map_err(|e| e.to_string())?);
        rows += 1;
    }
    if rows < 500 || slowest_fleet >= 2.0 {
        return Err(format!("{rows} benchmark rows, slowest fleet model {slowest_fleet:.3}s"));
    }
    within(
        fleet_time,
        300.0,
        format!("slowest 3-week model {slowest:.3}s, slowest fleet model {slowest_fleet:.3}s, 500-meter train"),
    )
}

// 11. Two identical simulate runs produce identical reports and alert logs.

fn digests(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for name in ["report.json", "alerts.jsonl", "alerts_tagged.jsonl", "detection.csv"] {
        let bytes = fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"))?;
        out.insert(name.to_string(), bytes);
    }
    Ok(out)
}

fn criterion_11() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for run in [&a, &b] {
        gridguard(&["--seed", "7", "--out", &run.to_string_lossy(), "simulate"])?;
    }
    let (da, db) = (digests(&a)?, digests(&b)?);
    let alerts = fs::read_to_string(a.join("alerts.jsonl")).map_err(|e| e.to_string())?.lines().count();
    let differing: Vec<&String> = da.keys().filter(|k| da[*k] != db[*k]).collect();
    ensure(
        differing.is_empty(),
        format!("{} files compared, {alerts} alerts, differing: {differing:?}", da.len()),
    )
}

fn main() {
    let mut results: Vec<(u8, &str, Check)> = vec![
        (1, "split criterion oracle", criterion_1()),
        (2, "pruning monotonicity", criterion_2()),
        (3, "prediction error ordering", criterion_3()),
    ];
    match detection_scenario() {
        Ok((out, elapsed)) => {
            results.push((4, "home detection rates", criterion_4(&out, elapsed)));
            results.push((5, "neighborhood detection rates", criterion_5(&out)));
            results.push((6, "rmse separation", criterion_6(&out)));
        }
        Err(e) => {
            for (n, name) in [(4, "home detection rates"), (5, "neighborhood detection rates"), (6, "rmse separation")] {
                results.push((n, name, Err(e.clone())));
            }
        }
    }
    results.push((7, "counter automaton oracle", criterion_7()));
    results.push((8, "fusion truth table", criterion_8()));
    results.push((9, "metric count fixture", criterion_9()));
    results.push((10, "training speed", criterion_10()));
    results.push((11, "end-to-end determinism", criterion_11()));

    let mut failed = 0;
    for (n, name, r) in &results {
        match r {
            Ok(d) => println!("criterion {n:>2} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
