use serde::{Deserialize, Serialize};

use super::{DetectError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlopeThreshold {
    /// Flag when `slope * len > 2 * pe`.
    Drift { pe: f64 },
    /// Flag when the slope itself exceeds the value (kWh per day).
    Slope(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub slope: f64,
    /// Slope scaled by the series length.
    pub drift: f64,
    pub flagged: bool,
}

/// Least-squares slope of `y` against its index. Zero for fewer than two
/// points.
pub fn ols_slope(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let n = y.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (v - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Looks for a sustained rise in daily consumption.
pub fn gradual_overload_check(daily_totals: &[f64], min_days: usize, threshold: SlopeThreshold) -> Result<SlopeReport> {
    let needed = min_days.max(2);
    if daily_totals.len() < needed {
        return Err(DetectError::InsufficientData {
            needed,
            got: daily_totals.len(),
        });
    }
    let slope = ols_slope(daily_totals);
    let drift = slope * daily_totals.len() as f64;
    let flagged = match threshold {
        SlopeThreshold::Drift { pe } => drift > 2.0 * pe,
        SlopeThreshold::Slope(s) => slope > s,
    };
    Ok(SlopeReport { slope, drift, flagged })
}
