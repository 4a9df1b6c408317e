use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};

/// Confusion counts with the attack as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Confusion { tp, fn_, fp, tn }
    }

    pub fn add(&mut self, predicted: bool, truth: bool) {
        match (predicted, truth) {
            (true, true) => self.tp += 1,
            (false, true) => self.fn_ += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn merge(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.fn_ += o.fn_;
        self.fp += o.fp;
        self.tn += o.tn;
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn rates(&self) -> Rates {
        let ratio = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        Rates {
            accuracy: ratio(self.tp + self.tn, self.total()),
            tpr: ratio(self.tp, self.positives()),
            fnr: ratio(self.fn_, self.positives()),
            fpr: ratio(self.fp, self.negatives()),
            tnr: ratio(self.tn, self.negatives()),
        }
    }
}

/// Confusion-matrix rates. A rate is absent when its class never occurs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: Option<f64>,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
}

impl Rates {
    /// Unweighted mean of each rate over the inputs where it is present.
    pub fn macro_average<'a>(all: impl IntoIterator<Item = &'a Rates>) -> Rates {
        let all: Vec<&Rates> = all.into_iter().collect();
        let mean = |get: fn(&Rates) -> Option<f64>| {
            let v: Vec<f64> = all.iter().filter_map(|r| get(r)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        Rates {
            accuracy: mean(|r| r.accuracy),
            tpr: mean(|r| r.tpr),
            fpr: mean(|r| r.fpr),
            tnr: mean(|r| r.tnr),
            fnr: mean(|r| r.fnr),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    pub rates: Rates,
}

pub fn compute_metrics(predictions: &[bool], truth: &[bool]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(HarnessError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    let mut c = Confusion::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        c.add(p, t);
    }
    Ok(Metrics { confusion: c, rates: c.rates() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (fpr, tpr), from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold down through every distinct score; an interval is
/// predicted positive when its score is at least the threshold.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(HarnessError::LengthMismatch {
            predictions: scores.len(),
            truth: truth.len(),
        });
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(HarnessError::SingleClass);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(HarnessError::Config("ROC scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

impl RocCurve {
    /// At most `n` points, evenly spaced along the sweep, endpoints kept.
    pub fn thinned(&self, n: usize) -> Vec<(f64, f64)> {
        let m = self.points.len();
        if m <= n || n < 2 {
            return self.points.clone();
        }
        (0..n).map(|k| self.points[k * (m - 1) / (n - 1)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_counts_reproduce_rates() {
        let r = Confusion::new(918, 82, 104, 896).rates();
        assert_eq!(r.tpr, Some(0.918));
        assert_eq!(r.fpr, Some(0.104));
        assert_eq!(r.fnr, Some(0.082));
        assert_eq!(r.tnr, Some(0.896));
        assert_eq!(r.accuracy, Some(0.907));
    }

    #[test]
    fn simple_metric_cases() {
        let m = compute_metrics(&[true, false, true], &[true, false, true]).unwrap();
        assert_eq!((m.rates.accuracy, m.rates.tpr, m.rates.fpr), (Some(1.0), Some(1.0), Some(0.0)));
        let all = compute_metrics(&[true; 4], &[true, false, true, false]).unwrap();
        assert_eq!((all.rates.tpr, all.rates.tnr), (Some(1.0), Some(0.0)));
        let none = compute_metrics(&[false, true], &[false, false]).unwrap();
        assert_eq!(none.rates.tpr, None);
        assert_eq!(none.rates.fpr, Some(0.5));
        assert!(compute_metrics(&[true], &[]).is_err());
    }

    #[test]
    fn roc_examples() {
        let two = roc_curve(&[1.0, 0.0], &[true, false]).unwrap();
        assert_eq!(two.points, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(two.auc, 1.0);
        let perfect = roc_curve(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let tied = roc_curve(&[0.5, 0.5], &[true, false]).unwrap();
        assert_eq!(tied.auc, 0.5);
        assert!(matches!(roc_curve(&[1.0], &[true]), Err(HarnessError::SingleClass)));
    }
}
