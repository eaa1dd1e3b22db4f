//! Small statistics helpers: least-squares lines, medians, bootstrap bands.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Ordinary least-squares line `y ≈ intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub rms_residual: f64,
    pub points: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Fit(format!("{} abscissae for {} values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Fit("a line needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite value in regression input".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        rms_residual: (sse / nf).sqrt(),
        points: n,
    })
}

/// Fit of `log y` against `log x`; all inputs must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.iter().chain(y).any(|&v| !(v > 0.0)) {
        return Err(Error::Fit("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Median of the finite values, `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap band for the log-log slope of the per-group median
/// against `x`. Each group (one per `x`) is resampled with replacement.
pub fn bootstrap_median_slope(
    x: &[f64],
    groups: &[Vec<f64>],
    reps: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if x.len() != groups.len() || groups.iter().any(|g| g.is_empty()) {
        return Err(Error::Fit("bootstrap needs one nonempty group per abscissa".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut slopes = Vec::with_capacity(reps);
    let mut resample = Vec::new();
    for _ in 0..reps {
        let mut meds = Vec::with_capacity(groups.len());
        for g in groups {
            resample.clear();
            resample.extend((0..g.len()).map(|_| g[rng.gen_range(0..g.len())]));
            meds.push(median(&resample).unwrap_or(f64::NAN));
        }
        if let Ok(fit) = loglog_fit(x, &meds) {
            slopes.push(fit.slope);
        }
    }
    if slopes.is_empty() {
        return Err(Error::Fit("no bootstrap replicate produced a slope".into()));
    }
    slopes.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((quantile_sorted(&slopes, tail), quantile_sorted(&slopes, 1.0 - tail)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let x: Vec<f64> = (1..=20).map(|k| 32.0 * k as f64).collect();
        let y: Vec<f64> = x.iter().map(|n| 3.0 * n.powf(-0.7)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        assert!((f.intercept.exp() - 3.0).abs() < 1e-10);
        assert!(f.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn bootstrap_band_brackets_exact_slope() {
        let x = [10.0, 20.0, 40.0, 80.0];
        let groups: Vec<Vec<f64>> = x
            .iter()
            .map(|n: &f64| (0..9).map(|k| n.powf(-1.0) * (1.0 + 0.01 * k as f64)).collect())
            .collect();
        let (lo, hi) = bootstrap_median_slope(&x, &groups, 200, 0.95, 4).unwrap();
        assert!(lo <= -1.0 + 0.02 && hi >= -1.0 - 0.02 && lo <= hi);
    }
}
