use serde::{Deserialize, Serialize};

use crate::ingest::{Attribute, AttributeSet, FeatureVector, Season};

/// interval, day_period, day_type, month, then season one-hot
/// (winter, spring, summer, autumn).
pub const LINEAR_FEATURES: usize = 8;

const FEATURE_NAMES: [&str; LINEAR_FEATURES] = [
    "interval",
    "day_period",
    "day_type",
    "month",
    "winter",
    "spring",
    "summer",
    "autumn",
];

/// Numeric encoding of a row. Attributes outside `attributes` encode as 0.
pub(crate) fn encode(f: &FeatureVector, attributes: AttributeSet) -> [f64; LINEAR_FEATURES] {
    let mut x = [0.0; LINEAR_FEATURES];
    if attributes.contains(Attribute::Interval) {
        x[0] = f64::from(f.interval.index());
    }
    if attributes.contains(Attribute::DayPeriod) {
        x[1] = f64::from(f.day_period as u8);
    }
    if attributes.contains(Attribute::DayType) {
        x[2] = f64::from(f.day_type as u8);
    }
    if attributes.contains(Attribute::Month) {
        x[3] = f64::from(f.month);
    }
    if attributes.contains(Attribute::Season) {
        let s = match f.season {
            Season::Winter => 4,
            Season::Spring => 5,
            Season::Summer => 6,
            Season::Autumn => 7,
        };
        x[s] = 1.0;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: [f64; LINEAR_FEATURES],
}

impl LinearModel {
    pub fn constant(c: f64) -> Self {
        LinearModel {
            intercept: c,
            coefficients: [0.0; LINEAR_FEATURES],
        }
    }

    pub fn eval(&self, x: &[f64; LINEAR_FEATURES]) -> f64 {
        let mut y = self.intercept;
        for (c, v) in self.coefficients.iter().zip(x) {
            if *c != 0.0 {
                y += c * v;
            }
        }
        y
    }

    pub fn describe(&self) -> String {
        let mut s = format!("{:.6}", self.intercept);
        for (c, name) in self.coefficients.iter().zip(FEATURE_NAMES) {
            if *c != 0.0 {
                let sign = if *c < 0.0 { '-' } else { '+' };
                s.push_str(&format!(" {sign} {:.6}*{name}", c.abs()));
            }
        }
        s
    }
}

/// Centered cross-products of a row subset.
pub(crate) struct Gram {
    pub n: usize,
    mean_x: [f64; LINEAR_FEATURES],
    mean_y: f64,
    sxx: [[f64; LINEAR_FEATURES]; LINEAR_FEATURES],
    sxy: [f64; LINEAR_FEATURES],
    syy: f64,
}

/// A least-squares fit on a column subset.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fit {
    pub model: LinearModel,
    pub sse: f64,
    /// Columns with nonzero weight.
    pub used: usize,
    /// A varying column had to be dropped as collinear.
    pub singular: bool,
}

impl Fit {
    /// Training RMSE inflated by `(n + p) / (n - p)`, p counting the
    /// intercept. Heavily penalized when there are no spare rows.
    pub fn estimated_error(&self, n: usize) -> f64 {
        let p = (self.used + 1) as f64;
        let n_f = n as f64;
        let rmse = (self.sse / n_f.max(1.0)).sqrt();
        if n_f > p {
            rmse * (n_f + p) / (n_f - p)
        } else {
            rmse * 10.0
        }
    }
}

const PIVOT_TOL: f64 = 1e-10;

impl Gram {
    pub fn new(xs: &[[f64; LINEAR_FEATURES]], ys: &[f64]) -> Self {
        let n = ys.len();
        let nf = n.max(1) as f64;
        let mut mean_x = [0.0; LINEAR_FEATURES];
        for x in xs {
            for j in 0..LINEAR_FEATURES {
                mean_x[j] += x[j];
            }
        }
        mean_x.iter_mut().for_each(|m| *m /= nf);
        let mean_y = ys.iter().sum::<f64>() / nf;
        let mut sxx = [[0.0; LINEAR_FEATURES]; LINEAR_FEATURES];
        let mut sxy = [0.0; LINEAR_FEATURES];
        let mut syy = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let mut d = [0.0; LINEAR_FEATURES];
            for j in 0..LINEAR_FEATURES {
                d[j] = x[j] - mean_x[j];
            }
            let dy = y - mean_y;
            for j in 0..LINEAR_FEATURES {
                if d[j] == 0.0 {
                    continue;
                }
                sxy[j] += d[j] * dy;
                for k in j..LINEAR_FEATURES {
                    sxx[j][k] += d[j] * d[k];
                }
            }
            syy += dy * dy;
        }
        for j in 0..LINEAR_FEATURES {
            for k in 0..j {
                sxx[j][k] = sxx[k][j];
            }
        }
        Gram { n, mean_x, mean_y, sxx, sxy, syy }
    }

    /// Columns with any variation in this subset.
    pub fn varying(&self) -> Vec<usize> {
        (0..LINEAR_FEATURES).filter(|&j| self.sxx[j][j] > 0.0).collect()
    }

    /// Least squares on `cols` via Cholesky of the centered normal
    /// equations; columns whose pivot vanishes are dropped.
    pub fn fit(&self, cols: &[usize]) -> Fit {
        let k = cols.len();
        let mut l = vec![vec![0.0; k]; k];
        let mut keep = vec![false; k];
        let mut singular = false;
        for a in 0..k {
            let ja = cols[a];
            let diag = self.sxx[ja][ja];
            let mut d = diag;
            for c in 0..a {
                if keep[c] {
                    d -= l[a][c] * l[a][c];
                }
            }
            if diag <= 0.0 || d <= PIVOT_TOL * diag {
                if diag > 0.0 {
                    singular = true;
                }
                continue;
            }
            keep[a] = true;
            let root = d.sqrt();
            l[a][a] = root;
            for b in a + 1..k {
                let jb = cols[b];
                let mut s = self.sxx[jb][ja];
                for c in 0..a {
                    if keep[c] {
                        s -= l[b][c] * l[a][c];
                    }
                }
                l[b][a] = s / root;
            }
        }

        // Forward then back substitution on the kept columns.
        let mut z = vec![0.0; k];
        for a in 0..k {
            if !keep[a] {
                continue;
            }
            let mut s = self.sxy[cols[a]];
            for c in 0..a {
                if keep[c] {
                    s -= l[a][c] * z[c];
                }
            }
            z[a] = s / l[a][a];
        }
        let mut b = vec![0.0; k];
        for a in (0..k).rev() {
            if !keep[a] {
                continue;
            }
            let mut s = z[a];
            for c in a + 1..k {
                if keep[c] {
                    s -= l[c][a] * b[c];
                }
            }
            b[a] = s / l[a][a];
        }

        let mut model = LinearModel::constant(self.mean_y);
        let mut explained = 0.0;
        let mut used = 0;
        for a in 0..k {
            if keep[a] && b[a] != 0.0 {
                let j = cols[a];
                model.coefficients[j] = b[a];
                model.intercept -= b[a] * self.mean_x[j];
                explained += b[a] * self.sxy[j];
                used += 1;
            }
        }
        // Cancellation leaves noise of order eps * syy on exact fits.
        let mut sse = (self.syy - explained).max(0.0);
        if sse <= 1e-12 * self.syy {
            sse = 0.0;
        }
        Fit {
            model,
            sse,
            used,
            singular,
        }
    }

    /// Full fit followed by greedy backward elimination of the column whose
    /// removal lowers the estimated error most, while any removal helps.
    pub fn fit_pruned(&self) -> Fit {
        let mut cols = self.varying();
        let mut best = self.fit(&cols);
        let mut best_err = best.estimated_error(self.n);
        let singular = best.singular;
        loop {
            let mut step: Option<(usize, Fit, f64)> = None;
            for drop in 0..cols.len() {
                let trial: Vec<usize> = cols.iter().copied().filter(|&c| c != cols[drop]).collect();
                let f = self.fit(&trial);
                let e = f.estimated_error(self.n);
                if e < best_err && step.as_ref().is_none_or(|s| e < s.2) {
                    step = Some((drop, f, e));
                }
            }
            match step {
                Some((drop, f, e)) => {
                    cols.remove(drop);
                    best = f;
                    best_err = e;
                }
                None => break,
            }
        }
        best.singular = singular;
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs_from(values: &[(f64, f64)]) -> Vec<[f64; LINEAR_FEATURES]> {
        values
            .iter()
            .map(|&(a, b)| {
                let mut x = [0.0; LINEAR_FEATURES];
                x[0] = a;
                x[2] = b;
                x
            })
            .collect()
    }

    #[test]
    fn exact_line_recovered() {
        let xs = xs_from(&(1..=24).map(|h| (f64::from(h), 0.0)).collect::<Vec<_>>());
        let ys: Vec<f64> = (1..=24).map(|h| 0.1 + 0.02 * f64::from(h)).collect();
        let fit = Gram::new(&xs, &ys).fit_pruned();
        assert!((fit.model.intercept - 0.1).abs() < 1e-12);
        assert!((fit.model.coefficients[0] - 0.02).abs() < 1e-12);
        assert!(fit.sse < 1e-20);
    }

    #[test]
    fn collinear_column_dropped() {
        // Second column duplicates the first up to scale.
        let xs = xs_from(&(0..10).map(|i| (f64::from(i), 2.0 * f64::from(i))).collect::<Vec<_>>());
        let ys: Vec<f64> = (0..10).map(|i| 1.0 + f64::from(i)).collect();
        let g = Gram::new(&xs, &ys);
        let fit = g.fit(&g.varying());
        assert!(fit.singular);
        assert_eq!(fit.used, 1);
        assert!(fit.sse < 1e-18);
        let x = xs[7];
        assert!((fit.model.eval(&x) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn constant_columns_give_mean() {
        let xs = vec![[0.0; LINEAR_FEATURES]; 4];
        let ys = [1.0, 2.0, 3.0, 6.0];
        let fit = Gram::new(&xs, &ys).fit_pruned();
        assert_eq!(fit.used, 0);
        assert_eq!(fit.model.intercept, 3.0);
        assert!((fit.sse - 14.0).abs() < 1e-12);
    }
}
