use chrono::{Days, NaiveDate};
use gridguard::detect::{
    decide, default_retrain_rows, AlertKind, CounterMode, DetectorParams, FlagWindow, NbhDetector, ShDetector,
};
use gridguard::ingest::{split_train_validation, AttributeSet, Dataset, FeatureVector, Interval, Level};
use gridguard::models::{train_and_validate, ModelKind, ModelParams, ModelTreeParams, TreeModel};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference: scan the flags since the last alert, window by window.
fn reference_alerts(flags: &[bool], nbr_incr: usize, n_window: usize) -> Vec<bool> {
    let mut out = vec![false; flags.len()];
    let mut since = 0;
    for t in 0..flags.len() {
        let lo = since.max((t + 1).saturating_sub(n_window));
        let count = flags[lo..=t].iter().filter(|&&f| f).count();
        if flags[t] && count > nbr_incr {
            out[t] = true;
            since = t + 1;
        }
    }
    out
}

fn window_alerts(flags: &[bool], params: DetectorParams) -> Vec<bool> {
    let mut w = FlagWindow::new(params);
    flags.iter().map(|&f| w.push(f)).collect()
}

#[test]
fn counter_matches_window_scan_on_all_short_sequences() {
    for (nbr_incr, n_window) in [(2, 4), (1, 3), (2, 3), (0, 1), (3, 5)] {
        let params = DetectorParams { nbr_incr, n_window, counter_mode: CounterMode::Window };
        for len in 0..=12usize {
            for bits in 0u32..(1 << len) {
                let flags: Vec<bool> = (0..len).map(|i| bits & (1 << i) != 0).collect();
                assert_eq!(
                    window_alerts(&flags, params),
                    reference_alerts(&flags, nbr_incr, n_window),
                    "{flags:?} nbr_incr={nbr_incr} n_window={n_window}"
                );
            }
        }
    }
}

#[test]
fn fusion_truth_table() {
    for nb_sh in 1..=8usize {
        for nb_alert in 0..=nb_sh {
            for nacr in [false, true] {
                let want = nacr || (nb_alert as f64) > nb_sh as f64 / 2.0;
                assert_eq!(decide(nacr, nb_alert, nb_sh), want, "{nacr} {nb_alert} {nb_sh}");
            }
        }
    }
    assert!(decide(false, 251, 500));
    assert!(!decide(false, 250, 500));
}

fn leaf(value: f64, pe: f64, attrs: AttributeSet) -> TreeModel {
    let mut m = TreeModel::leaf(ModelKind::RepTree, attrs, value, 1);
    m.trained_rmse = pe;
    m
}

fn hours(days: u64, y: impl Fn(u64, u8) -> f64) -> Vec<FeatureVector> {
    let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap();
    let mut v = Vec::new();
    for d in 0..days {
        for h in 1..=24 {
            v.push(FeatureVector::new(start + Days::new(d), Interval::Hour(h), y(d, h)));
        }
    }
    v
}

#[test]
fn perfectly_predicted_stream_raises_nothing() {
    let mut sh = ShDetector::new(3, leaf(0.6, 0.0, AttributeSet::sh_default()), DetectorParams::default());
    for r in hours(14, |_, _| 0.6) {
        assert!(sh.step(&r).unwrap().alert.is_none());
    }
    let mut nbh = NbhDetector::new(leaf(40.0, 0.0, AttributeSet::all()));
    let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap();
    for d in 0..14 {
        for s in 1..=48 {
            let r = FeatureVector::new(start + Days::new(d), Interval::Slot(s), 40.0);
            assert!(nbh.step(&r).unwrap().alert.is_none());
        }
    }
}

#[test]
fn exact_margin_never_flags() {
    let (p, pe) = (0.5, 0.25);
    let mut sh = ShDetector::new(3, leaf(p, pe, AttributeSet::sh_default()), DetectorParams { nbr_incr: 0, ..Default::default() });
    for r in hours(2, |_, _| p + pe) {
        let out = sh.step(&r).unwrap();
        assert!(!out.flagged && out.alert.is_none());
    }
    let mut nbh = NbhDetector::new(leaf(240.0, 48.0, AttributeSet::all()));
    let r = FeatureVector::new(NaiveDate::from_ymd_opt(2009, 7, 13).unwrap(), Interval::Slot(3), 288.0);
    assert!(!nbh.step(&r).unwrap().flagged);
}

fn sh_run(values: &[f64]) -> (Vec<bool>, ShDetector) {
    let mut sh = ShDetector::new(1, leaf(0.5, 0.3, AttributeSet::sh_default()), DetectorParams::default());
    let rows = hours(values.len().div_ceil(24) as u64, |_, _| 0.0);
    let alerts = values
        .iter()
        .zip(rows)
        .map(|(&v, r)| sh.step(&FeatureVector { consumption: v, ..r }).unwrap().alert.is_some())
        .collect();
    (alerts, sh)
}

fn arb_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::sample::select(vec![0.2, 0.5, 0.8, 0.81, 1.2, 3.0]), 1..72)
}

proptest! {
    #[test]
    fn every_row_routed_once(values in arb_values()) {
        let (alerts, sh) = sh_run(&values);
        prop_assert_eq!(sh.benign_buffer.len() + sh.suspects.len(), values.len());
        prop_assert_eq!(sh.suspects.len(), alerts.iter().filter(|&&a| a).count());
    }

    #[test]
    fn raising_one_interval_keeps_alerting(values in arb_values(), at in any::<prop::sample::Index>(), bump in 0.0f64..3.0) {
        let (before, _) = sh_run(&values);
        let mut raised = values.clone();
        let i = at.index(values.len());
        raised[i] += bump;
        let (after, _) = sh_run(&raised);
        let first = |a: &[bool]| a.iter().position(|&x| x);
        if let Some(t) = first(&before) {
            let t2 = first(&after);
            prop_assert!(t2.is_some_and(|t2| t2 <= t), "{before:?} -> {after:?}");
        }
    }

    #[test]
    fn alerts_exceed_their_margin(values in arb_values()) {
        let mut sh = ShDetector::new(1, leaf(0.5, 0.3, AttributeSet::sh_default()), DetectorParams::default());
        for (v, r) in values.iter().zip(hours(3, |_, _| 0.0)) {
            if let Some(a) = sh.step(&FeatureVector { consumption: *v, ..r }).unwrap().alert {
                prop_assert_eq!(a.kind, AlertKind::ShAnomaly);
                prop_assert!(a.observed > a.predicted + a.threshold);
            }
        }
    }
}

fn noisy(days: u64, seed: u64, offset: u64) -> Vec<FeatureVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2009, 7, 13).unwrap() + Days::new(offset);
    let mut v = Vec::new();
    for d in 0..days {
        for h in 1..=24u8 {
            let base = 0.3 + if (18..=22).contains(&h) { 0.6 } else { 0.0 };
            v.push(FeatureVector::new(start + Days::new(d), Interval::Hour(h), base + rng.random_range(0.0..0.1)));
        }
    }
    v
}

#[test]
fn retrain_tick_swaps_model_when_buffer_full() {
    let mut history = Dataset::new(Level::Sh, Some(4), AttributeSet::sh_default());
    history.rows = noisy(56, 1, 0);
    let (train, valid) = split_train_validation(&history, 3).unwrap();
    let params = ModelParams::ModelTree(ModelTreeParams::default());
    let model = train_and_validate(&train, &valid, &params).unwrap();
    let old_pe = model.trained_rmse;
    let mut sh = ShDetector::new(4, model, DetectorParams::default()).with_history(history.rows.clone());
    assert_eq!(sh.pe(), old_pe);

    let fresh = noisy(28, 2, 56);
    for r in &fresh[..fresh.len() - 1] {
        sh.step(r).unwrap();
    }
    let need = default_retrain_rows(Level::Sh);
    assert_eq!(need, fresh.len());
    let buffered = sh.benign_buffer.len();
    assert!(sh.retrain_tick(need, &params, 3).unwrap().is_none());
    assert_eq!(sh.benign_buffer.len(), buffered);

    sh.step(fresh.last().unwrap()).unwrap();
    let min_rows = sh.benign_buffer.len();
    let swapped = sh.retrain_tick(min_rows, &params, 3).unwrap().expect("retrained");
    assert!(sh.benign_buffer.is_empty());
    assert_eq!(sh.pe(), swapped.trained_rmse);
    assert!((sh.pe() - old_pe).abs() <= 0.2 * old_pe, "{} vs {old_pe}", sh.pe());
    assert_eq!(sh.history.len(), history.len() + min_rows);
}

#[test]
fn failed_retrain_keeps_old_model() {
    let mut sh = ShDetector::new(9, leaf(0.5, 0.3, AttributeSet::sh_default()), DetectorParams::default());
    // Two weeks of data cannot be split into week blocks.
    for r in hours(14, |_, _| 0.5) {
        sh.step(&r).unwrap();
    }
    let params = ModelParams::ModelTree(ModelTreeParams::default());
    assert!(sh.retrain_tick(10, &params, 1).is_err());
    assert_eq!(sh.pe(), 0.3);
    assert_eq!(sh.benign_buffer.len(), 14 * 24);
}
