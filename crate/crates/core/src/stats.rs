//! Estimators, confidence intervals and goodness-of-fit tests.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
    /// Runs excluded from the mean because they hit the horizon.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub censored: Option<u64>,
}

impl SummaryEstimate {
    /// `None` for empty input. The standard error is `s / sqrt(n)` with the
    /// unbiased sample variance (zero for a single sample).
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(SummaryEstimate { mean, stderr: (var / n).sqrt(), count: xs.len() as u64, censored: None })
    }

    /// Estimate of a probability from `successes` out of `trials`.
    pub fn proportion(successes: u64, trials: u64) -> Option<Self> {
        if trials == 0 {
            return None;
        }
        let p = successes as f64 / trials as f64;
        Some(SummaryEstimate {
            mean: p,
            stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            count: trials,
            censored: None,
        })
    }

    pub fn with_censored(mut self, censored: u64) -> Self {
        self.censored = Some(censored);
        self
    }

    /// `|mean - target| <= k * stderr + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + slack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One-sample Kolmogorov-Smirnov test of sorted `samples` against `cdf`.
///
/// The p-value uses the asymptotic Kolmogorov law with Stephens' small-sample
/// correction; it is conservative for `n >= 50`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<KsResult> {
    if samples.len() < 10 {
        return Err(Error::invalid("samples", "need at least 10 samples"));
    }
    if samples.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("samples", "must be sorted ascending and free of NaN"));
    }
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(lambda), n: samples.len() })
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi = std::f64::consts::PI;
        let c = -pi * pi / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (c * j * j).exp();
        }
        (1.0 - (2.0 * pi).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells kept after pooling.
    pub cells: usize,
}

/// Pearson goodness-of-fit test.
///
/// Adjacent cells are pooled left to right until each pooled cell has an
/// expected count of at least 5; a short remainder is merged into the last
/// pooled cell. `expected` must be a probability vector over the same cells.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() {
        return Err(Error::invalid("expected", "length differs from observed"));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::invalid("observed", "all counts are zero"));
    }
    let mass: f64 = expected.iter().sum();
    if expected.iter().any(|p| !(*p >= 0.0)) || (mass - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("expected", format!("must be a probability vector, sums to {mass}")));
    }
    let n = total as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        obs += o as f64;
        exp += p * n;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => cells.push((obs, exp)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::invalid("expected", "fewer than two cells after pooling"));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .map_err(|e| Error::invalid("dof", e.to_string()))?;
    Ok(ChiSquareResult { statistic, dof, p_value, cells: cells.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<Interval> {
    if trials == 0 || successes > trials {
        return Err(Error::invalid("trials", "need 0 <= successes <= trials and trials >= 1"));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(Interval { lower: (center - half).max(0.0), upper: (center + half).min(1.0) })
}
