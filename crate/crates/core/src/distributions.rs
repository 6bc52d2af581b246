//! The seed-bank age distribution `mu`: the law of the number of generations
//! between an individual and its parent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::special::zeta;
use crate::{lit, Error, Result, Scalar};

/// Serializable description of an age distribution, e.g.
/// `{"kind":"power_law","alpha":0.3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    PowerLaw { alpha: f64 },
    Dirac { m: u64 },
    Explicit { pmf: Vec<f64> },
}

impl DistributionSpec {
    pub fn build<T: Scalar>(&self) -> Result<AgeDistribution<T>> {
        match self {
            DistributionSpec::PowerLaw { alpha } => AgeDistribution::power_law(lit(*alpha)),
            DistributionSpec::Dirac { m } => AgeDistribution::dirac(*m),
            DistributionSpec::Explicit { pmf } => {
                AgeDistribution::explicit(pmf.iter().map(|&p| lit(p)).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mean<T> {
    Finite(T),
    Infinite,
}

impl<T: Copy> Mean<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Mean::Finite(m) => Some(m),
            Mean::Infinite => None,
        }
    }
}

/// Whether two distinct ancestral lines meet almost surely, which is decided
/// by convergence of `sum q_n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeetingRegime {
    /// `sum q_n^2 = inf`: lines meet with probability one.
    Certain,
    /// `sum q_n^2 < inf` (power law, `alpha < 1/2`): positive probability
    /// that two lines never meet.
    Transient,
    /// Power law with `alpha = 1/2`, where the answer depends on the slowly
    /// varying factor.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgeKind<T> {
    Dirac { m: u64 },
    /// `pmf[k]` is the mass of `k + 1`.
    Explicit { pmf: Vec<T> },
    /// Tail `P(eta >= n) = n^-alpha`.
    PowerLaw { alpha: T },
}

#[derive(Debug, Clone)]
pub struct AgeDistribution<T> {
    kind: AgeKind<T>,
    /// Explicit only: `tails[k] = P(eta >= k + 1)`.
    tails: Vec<T>,
    /// Explicit only: cumulative masses for inverse-CDF sampling.
    cdf: Vec<f64>,
    mean: Mean<T>,
}

impl<T: Scalar> AgeDistribution<T> {
    /// Power law with tail `n^-alpha` (slowly varying factor fixed to 1).
    pub fn power_law(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("must be positive and finite, got {alpha}")));
        }
        let mean = match zeta(alpha) {
            Some(z) => Mean::Finite(z),
            None => Mean::Infinite,
        };
        Ok(AgeDistribution { kind: AgeKind::PowerLaw { alpha }, tails: Vec::new(), cdf: Vec::new(), mean })
    }

    /// Point mass at `m`. For `m > 1` the distribution has no mass at 1 and
    /// the resulting renewal process is periodic.
    pub fn dirac(m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::invalid("m", "must be at least 1"));
        }
        Ok(AgeDistribution {
            kind: AgeKind::Dirac { m },
            tails: Vec::new(),
            cdf: Vec::new(),
            mean: Mean::Finite(lit(m as f64)),
        })
    }

    /// Finite table with `pmf[k]` the mass of `k + 1`. Trailing zeros are
    /// dropped and the table is renormalised after the sum check.
    pub fn explicit(mut pmf: Vec<T>) -> Result<Self> {
        if pmf.iter().any(|p| !p.is_finite() || *p < T::zero()) {
            return Err(Error::invalid("pmf", "entries must be finite and non-negative"));
        }
        while pmf.last().is_some_and(|p| p.is_zero()) {
            pmf.pop();
        }
        if pmf.is_empty() {
            return Err(Error::invalid("pmf", "no positive mass"));
        }
        let total: T = pmf.iter().copied().sum();
        let tol = lit::<T>(1e-12).max(lit::<T>(32.0 * pmf.len() as f64) * T::epsilon());
        if (total - T::one()).abs() > tol {
            return Err(Error::invalid("pmf", format!("masses sum to {total}, expected 1")));
        }
        for p in pmf.iter_mut() {
            *p = *p / total;
        }
        let mut tails = vec![T::zero(); pmf.len()];
        let mut acc = T::zero();
        for k in (0..pmf.len()).rev() {
            acc = acc + pmf[k];
            tails[k] = acc;
        }
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut c = 0.0;
        for p in &pmf {
            c += p.to_f64().unwrap_or(0.0);
            cdf.push(c);
        }
        let mean = tails.iter().copied().sum();
        Ok(AgeDistribution { kind: AgeKind::Explicit { pmf }, tails, cdf, mean: Mean::Finite(mean) })
    }

    /// Conditions on `{1..=j}`: the result is supported there and
    /// proportional to `self` on that range.
    pub fn truncate(&self, j: u64) -> Result<Self> {
        if j < 1 {
            return Err(Error::invalid("j", "must be at least 1"));
        }
        let width = match self.support_max() {
            Some(s) => s.min(j),
            None => j,
        };
        let table = self.pmf_table(width as usize);
        let mass: T = table.iter().copied().sum();
        if !(mass > T::zero()) {
            return Err(Error::invalid("j", format!("no mass on 1..={j}")));
        }
        Self::explicit(table.into_iter().map(|p| p / mass).collect())
    }

    pub fn kind(&self) -> &AgeKind<T> {
        &self.kind
    }

    pub fn spec(&self) -> DistributionSpec {
        match &self.kind {
            AgeKind::Dirac { m } => DistributionSpec::Dirac { m: *m },
            AgeKind::Explicit { pmf } => DistributionSpec::Explicit {
                pmf: pmf.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect(),
            },
            AgeKind::PowerLaw { alpha } => {
                DistributionSpec::PowerLaw { alpha: alpha.to_f64().unwrap_or(f64::NAN) }
            }
        }
    }

    /// Power-law exponent, if this is a power law.
    pub fn alpha(&self) -> Option<T> {
        match self.kind {
            AgeKind::PowerLaw { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Largest point of the support, `None` when unbounded.
    pub fn support_max(&self) -> Option<u64> {
        match &self.kind {
            AgeKind::Dirac { m } => Some(*m),
            AgeKind::Explicit { pmf } => Some(pmf.len() as u64),
            AgeKind::PowerLaw { .. } => None,
        }
    }

    /// `mu({1}) > 0`, which makes the renewal process aperiodic.
    pub fn satisfies_standing_assumption(&self) -> bool {
        self.pmf(1) > T::zero()
    }

    pub fn pmf(&self, n: u64) -> T {
        if n == 0 {
            return T::zero();
        }
        match &self.kind {
            AgeKind::Dirac { m } => {
                if n == *m {
                    T::one()
                } else {
                    T::zero()
                }
            }
            AgeKind::Explicit { pmf } => pmf.get((n - 1) as usize).copied().unwrap_or_else(T::zero),
            AgeKind::PowerLaw { alpha } => power_law_pmf(*alpha, n),
        }
    }

    /// `P(eta >= n)`.
    pub fn tail(&self, n: u64) -> T {
        if n <= 1 {
            return T::one();
        }
        match &self.kind {
            AgeKind::Dirac { m } => {
                if n <= *m {
                    T::one()
                } else {
                    T::zero()
                }
            }
            AgeKind::Explicit { .. } => {
                self.tails.get((n - 1) as usize).copied().unwrap_or_else(T::zero)
            }
            AgeKind::PowerLaw { alpha } => lit::<T>(n as f64).powf(-*alpha),
        }
    }

    /// `[pmf(1), ..., pmf(len)]`.
    pub fn pmf_table(&self, len: usize) -> Vec<T> {
        match &self.kind {
            AgeKind::PowerLaw { alpha } => {
                (1..=len as u64).map(|n| power_law_pmf(*alpha, n)).collect()
            }
            _ => (1..=len as u64).map(|n| self.pmf(n)).collect(),
        }
    }

    pub fn mean(&self) -> Mean<T> {
        self.mean
    }

    /// `1 / E[eta]`, defined for finite mean.
    pub fn beta(&self) -> Option<T> {
        self.mean.finite().map(|m| T::one() / m)
    }

    /// Stationary probability that a lineage is `i` generations from its next
    /// renewal: `tail(i) / mean`.
    pub fn stationary_weight(&self, i: u64) -> Option<T> {
        self.beta().map(|b| self.tail(i) * b)
    }

    /// `sum_i mu(i)^2`. For power laws the sum is taken to `10^5` with an
    /// integral remainder.
    pub fn pmf_sum_of_squares(&self) -> T {
        match &self.kind {
            AgeKind::Dirac { .. } => T::one(),
            AgeKind::Explicit { pmf } => pmf.iter().map(|&p| p * p).sum(),
            AgeKind::PowerLaw { alpha } => {
                let m = 100_000u64;
                let head: T = (1..=m).rev().map(|n| power_law_pmf(*alpha, n).powi(2)).sum();
                let mf = lit::<T>(m as f64);
                let two_a1 = *alpha + *alpha + T::one();
                let f_m = power_law_pmf(*alpha, m).powi(2);
                head + *alpha * *alpha * mf.powf(-two_a1) / two_a1 - f_m / lit(2.0)
            }
        }
    }

    pub fn meeting_regime(&self) -> MeetingRegime {
        match self.kind {
            AgeKind::PowerLaw { alpha } => {
                let half = lit::<T>(0.5);
                if alpha < half {
                    MeetingRegime::Transient
                } else if alpha == half {
                    MeetingRegime::Boundary
                } else {
                    MeetingRegime::Certain
                }
            }
            _ => MeetingRegime::Certain,
        }
    }

    /// Draws an interarrival time. Power laws use exact inversion
    /// `floor(U^(-1/alpha))`, saturating at `u64::MAX`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match &self.kind {
            AgeKind::Dirac { m } => *m,
            AgeKind::Explicit { .. } => sample_cdf(&self.cdf, rng),
            AgeKind::PowerLaw { alpha } => {
                let alpha = alpha.to_f64().unwrap_or(f64::NAN);
                // U in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / alpha).floor() as u64
            }
        }
    }

    /// Draws the distance to the next renewal of a stationary renewal process,
    /// i.e. `i` with probability `tail(i) / mean`. Requires finite mean.
    pub fn sample_stationary_offset<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<u64> {
        let mean = self.mean.finite().ok_or_else(|| {
            Error::Regime("stationary renewal law requires a finite-mean age distribution".into())
        })?;
        Ok(match &self.kind {
            AgeKind::Dirac { m } => rng.random_range(1..=*m),
            AgeKind::Explicit { .. } => {
                let mean = mean.to_f64().unwrap_or(f64::NAN);
                let u = rng.random::<f64>() * mean;
                let mut acc = 0.0;
                let mut pick = self.tails.len() as u64;
                for (k, t) in self.tails.iter().enumerate() {
                    acc += t.to_f64().unwrap_or(0.0);
                    if u < acc {
                        pick = k as u64 + 1;
                        break;
                    }
                }
                pick
            }
            AgeKind::PowerLaw { alpha } => {
                // Rejection from the continuous Pareto law of exponent alpha - 1
                // rounded down; the acceptance ratio is bounded by 2^alpha.
                let a = alpha.to_f64().unwrap_or(f64::NAN);
                loop {
                    let u = 1.0 - rng.random::<f64>();
                    let x = u.powf(-1.0 / (a - 1.0)).floor();
                    let proposal = -(x.powf(1.0 - a)) * ((1.0 - a) * (1.0 / x).ln_1p()).exp_m1();
                    let target = x.powf(-a) * (a - 1.0);
                    let accept = target / (proposal * 2f64.powf(a));
                    if rng.random::<f64>() < accept {
                        break x as u64;
                    }
                }
            }
        })
    }
}

/// `n^-alpha - (n+1)^-alpha` without cancellation.
fn power_law_pmf<T: Scalar>(alpha: T, n: u64) -> T {
    let nf = lit::<T>(n as f64);
    -nf.powf(-alpha) * (-alpha * (T::one() / nf).ln_1p()).exp_m1()
}

fn sample_cdf<R: Rng + ?Sized>(cdf: &[f64], rng: &mut R) -> u64 {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    let idx = cdf.partition_point(|&c| c <= u);
    idx.min(cdf.len() - 1) as u64 + 1
}
