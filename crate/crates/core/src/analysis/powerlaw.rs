use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DegreeSummary;

/// Which part of the distribution to fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRange {
    /// The central `decades` (base 10) of the positive values' log range.
    MiddleDecades(f64),
    /// Between two sample quantiles.
    Quantiles(f64, f64),
}

impl Default for FitRange {
    fn default() -> Self {
        FitRange::MiddleDecades(2.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Least squares on `log P(D >= d)` against `log d`.
    CcdfRegression,
    /// Hill estimator above the lower end of the range.
    Hill,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Density exponent `γ` in `p(d) ∝ d^{-γ}`.
    pub exponent: f64,
    pub std_error: f64,
    /// CCDF slope `1 - γ` (regression only).
    pub slope: Option<f64>,
    pub range: (f64, f64),
    /// Samples inside the range.
    pub samples: usize,
    pub method: FitMethod,
}

pub const MIN_SAMPLES_IN_RANGE: usize = 100;

pub fn fit_power_law(values: &[f64], range: FitRange, method: FitMethod) -> Result<PowerLawFit> {
    let mut xs: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    xs.sort_by(f64::total_cmp);
    if xs.is_empty() {
        return Err(Error::domain("no positive values to fit"));
    }
    let (lo, hi) = resolve_range(&xs, range)?;
    if !(hi > lo) {
        return Err(Error::domain(format!("degenerate fit range [{lo}, {hi}]")));
    }
    let first = xs.partition_point(|&x| x < lo);
    let end = xs.partition_point(|&x| x <= hi);
    let samples = end - first;
    if samples < MIN_SAMPLES_IN_RANGE {
        return Err(Error::domain(format!(
            "{samples} values in the fit range, need at least {MIN_SAMPLES_IN_RANGE}"
        )));
    }
    let fit = match method {
        FitMethod::CcdfRegression => ccdf_regression(&xs, first, end)?,
        FitMethod::Hill => hill(&xs[first..]),
    };
    let (exponent, std_error, slope) = fit;
    if !(exponent > 1.0) {
        return Err(Error::domain(format!(
            "fitted exponent {exponent} is not a power-law tail"
        )));
    }
    Ok(PowerLawFit {
        exponent,
        std_error,
        slope,
        range: (lo, hi),
        samples,
        method,
    })
}

/// Fits the total degree of every vertex.
pub fn fit_degrees(degrees: &DegreeSummary, range: FitRange, method: FitMethod) -> Result<PowerLawFit> {
    let values: Vec<f64> = degrees.total.iter().map(|&d| d as f64).collect();
    fit_power_law(&values, range, method)
}

fn resolve_range(sorted: &[f64], range: FitRange) -> Result<(f64, f64)> {
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];
    match range {
        FitRange::MiddleDecades(decades) => {
            if !(decades > 0.0) {
                return Err(Error::domain("decade count must be positive"));
            }
            let mid = 0.5 * (min.log10() + max.log10());
            Ok((
                10f64.powf(mid - decades / 2.0).max(min),
                10f64.powf(mid + decades / 2.0).min(max),
            ))
        }
        FitRange::Quantiles(q0, q1) => {
            if !(0.0 <= q0 && q0 < q1 && q1 <= 1.0) {
                return Err(Error::domain(format!(
                    "quantile pair ({q0}, {q1}) is not increasing in [0, 1]"
                )));
            }
            let at = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];
            Ok((at(q0), at(q1)))
        }
    }
}

fn ccdf_regression(sorted: &[f64], first: usize, end: usize) -> Result<(f64, f64, Option<f64>)> {
    let total = sorted.len() as f64;
    let mut pts = Vec::new();
    let mut i = first;
    while i < end {
        let x = sorted[i];
        pts.push((x.ln(), ((sorted.len() - i) as f64 / total).ln()));
        while i < end && sorted[i] == x {
            i += 1;
        }
    }
    if pts.len() < 3 {
        return Err(Error::domain(format!(
            "only {} distinct values in the fit range",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (resid / (k - 2.0) / sxx).sqrt();
    Ok((1.0 - slope, se, Some(slope)))
}

fn hill(tail: &[f64]) -> (f64, f64, Option<f64>) {
    let x_min = tail[0];
    let k = tail.len() as f64;
    let s: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    let index = k / s;
    (1.0 + index, index / k.sqrt(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_zipf_gives_two() {
        let zipf: Vec<f64> = (1..=10_000).map(|i| 1e6 / i as f64).collect();
        let fit = fit_power_law(&zipf, FitRange::default(), FitMethod::CcdfRegression).unwrap();
        assert!((fit.exponent - 2.0).abs() <= 0.05, "{}", fit.exponent);
    }

    #[test]
    fn pareto_samples_recovered_by_hill() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for gamma in [2.0, 3.0] {
            let xs: Vec<f64> = (0..10_000)
                .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / (gamma - 1.0)))
                .collect();
            let fit = fit_power_law(&xs, FitRange::Quantiles(0.0, 1.0), FitMethod::Hill).unwrap();
            assert!((fit.exponent - gamma).abs() <= 2.0 * fit.std_error, "{gamma}: {fit:?}");
        }
    }

    #[test]
    fn constant_values_rejected() {
        let flat = vec![7.0; 1000];
        assert!(fit_power_law(&flat, FitRange::default(), FitMethod::CcdfRegression).is_err());
        assert!(fit_power_law(&flat, FitRange::Quantiles(0.1, 0.9), FitMethod::Hill).is_err());
    }

    #[test]
    fn too_few_samples_rejected() {
        let few: Vec<f64> = (1..=50).map(|i| 100.0 / i as f64).collect();
        assert!(fit_power_law(&few, FitRange::default(), FitMethod::CcdfRegression).is_err());
    }
}
