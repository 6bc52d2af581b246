//! The renewal sequence `q_n`: the probability that a single ancestral line
//! has an ancestor exactly `n` generations back.
//!
//! `q_0 = 1` and `q_n = sum_{k=1}^{n} mu(k) q_{n-k}`. Short horizons and narrow
//! supports are computed by the direct recursion, summed left to right in `k`.
//! Long power-law horizons use the generating function `Q = 1 / (1 - M)`,
//! inverted by Newton iteration with FFT products; both paths are
//! deterministic.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::distributions::{AgeDistribution, AgeKind};
use crate::series;
use crate::special::gamma;
use crate::stats::SummaryEstimate;
use crate::{lit, Error, Result, Scalar};

/// Work budget (multiply-adds) below which the direct recursion is used.
const DIRECT_WORK_LIMIT: u128 = 1 << 26;

/// Default memory budget for a renewal computation.
pub const MEMORY_BUDGET_BYTES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenewalMethod {
    /// Direct recursion when cheap, FFT inversion otherwise.
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSequence<T> {
    q: Vec<T>,
}

/// A partial sum together with the amount contributed by its last decade of
/// summation indices, `n` in `(last / 10, last]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumDiagnostic<T> {
    pub value: T,
    pub last_decade_increment: T,
}

impl<T: Scalar> SumDiagnostic<T> {
    /// `last_decade_increment <= rel_tol * value`.
    pub fn converged(&self, rel_tol: T) -> bool {
        self.last_decade_increment <= rel_tol * self.value.abs()
    }
}

impl<T: Scalar> RenewalSequence<T> {
    pub fn compute(dist: &AgeDistribution<T>, horizon: u64) -> Result<Self> {
        Self::compute_with(dist, horizon, RenewalMethod::Auto, MEMORY_BUDGET_BYTES)
    }

    pub fn compute_with(
        dist: &AgeDistribution<T>,
        horizon: u64,
        method: RenewalMethod,
        memory_budget: usize,
    ) -> Result<Self> {
        let len = usize::try_from(horizon)
            .ok()
            .and_then(|h| h.checked_add(1))
            .ok_or_else(|| Error::Resource(format!("horizon {horizon} does not fit in memory")))?;

        if let AgeKind::Dirac { m } = dist.kind() {
            let q = (0..len as u64).map(|n| if n % m == 0 { T::one() } else { T::zero() }).collect();
            return Ok(RenewalSequence { q });
        }

        let width = dist.support_max().map_or(len - 1, |s| (s as usize).min(len - 1));
        let direct_work = (len as u128) * (width as u128);
        let use_fft = match method {
            RenewalMethod::Auto => direct_work > DIRECT_WORK_LIMIT,
            RenewalMethod::Direct => false,
            RenewalMethod::Fft => true,
        };
        let word = std::mem::size_of::<T>();
        let needed = if use_fft {
            series::reciprocal_bytes::<T>(len) + word * len
        } else {
            2 * word * len
        };
        if needed > memory_budget {
            return Err(Error::Resource(format!(
                "horizon {horizon} needs about {} MiB, budget is {} MiB; reduce the horizon",
                needed >> 20,
                memory_budget >> 20
            )));
        }

        let pmf = dist.pmf_table(width);
        let q = if use_fft {
            let mut g = Vec::with_capacity(width + 1);
            g.push(T::one());
            g.extend(pmf.iter().map(|&p| -p));
            drop(pmf);
            series::reciprocal(&g, len)
        } else {
            direct_recursion(&pmf, len)
        };
        Ok(RenewalSequence { q })
    }

    /// Wraps precomputed values `q_0..=q_H`.
    pub fn from_values(q: Vec<T>) -> Self {
        assert!(!q.is_empty(), "a renewal sequence holds at least q_0");
        RenewalSequence { q }
    }

    pub fn horizon(&self) -> u64 {
        (self.q.len() - 1) as u64
    }

    /// `q_n`, with `q_n = 0` for `n < 0`; `None` beyond the horizon.
    pub fn get(&self, n: i64) -> Option<T> {
        if n < 0 {
            return Some(T::zero());
        }
        self.q.get(n as usize).copied()
    }

    pub fn values(&self) -> &[T] {
        &self.q
    }

    /// `sum_{n=0}^{i} q_n`.
    pub fn partial_sum(&self, i: u64) -> T {
        let end = (i as usize + 1).min(self.q.len());
        self.q[..end].iter().copied().sum()
    }

    /// `sum_{n=0}^{H} q_n^2`.
    pub fn sum_q_squared(&self) -> SumDiagnostic<T> {
        self.cross_sum(0)
    }

    /// `sum_{n=0}^{H-lag} q_n q_{n+lag}`.
    pub fn cross_sum(&self, lag: u64) -> SumDiagnostic<T> {
        let lag = lag as usize;
        if lag >= self.q.len() {
            return SumDiagnostic { value: T::zero(), last_decade_increment: T::zero() };
        }
        let last = self.q.len() - 1 - lag;
        let cut = last / 10;
        let mut head = T::zero();
        let mut tail = T::zero();
        for n in 0..=last {
            let term = self.q[n] * self.q[n + lag];
            if n <= cut {
                head = head + term;
            } else {
                tail = tail + term;
            }
        }
        SumDiagnostic { value: head + tail, last_decade_increment: tail }
    }

    /// `max_n |q_n - sum_k mu(k) q_{n-k}|` over `1 <= n <= H`.
    pub fn renewal_residual(&self, dist: &AgeDistribution<T>) -> T {
        let len = self.q.len();
        let width = dist.support_max().map_or(len - 1, |s| (s as usize).min(len - 1));
        let pmf = dist.pmf_table(width);
        let mut worst = T::zero();
        for n in 1..len {
            let mut acc = T::zero();
            for k in 1..=n.min(width) {
                acc = acc + pmf[k - 1] * self.q[n - k];
            }
            worst = worst.max((self.q[n] - acc).abs());
        }
        worst
    }

    /// CSV with header `n,q_n`, values at 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,q_n")?;
        for (n, q) in self.q.iter().enumerate() {
            writeln!(w, "{n},{:.16e}", q.to_f64().unwrap_or(f64::NAN))?;
        }
        Ok(())
    }
}

fn direct_recursion<T: Scalar>(pmf: &[T], len: usize) -> Vec<T> {
    let mut q = Vec::with_capacity(len);
    q.push(T::one());
    for n in 1..len {
        let mut acc = T::zero();
        for k in 1..=n.min(pmf.len()) {
            acc = acc + pmf[k - 1] * q[n - k];
        }
        q.push(acc);
    }
    q
}

/// Monte-Carlo estimate of `q_n`: runs the renewal process past `n` and records
/// whether it renewed exactly at `n`.
pub fn mc_renewal_probability<T: Scalar, R: Rng + ?Sized>(
    dist: &AgeDistribution<T>,
    n: u64,
    reps: u64,
    rng: &mut R,
) -> Result<SummaryEstimate> {
    if reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    let mut hits = 0u64;
    for _ in 0..reps {
        let mut t = 0u64;
        while t < n {
            t = t.saturating_add(dist.sample(rng));
        }
        if t == n {
            hits += 1;
        }
    }
    Ok(SummaryEstimate::proportion(hits, reps).expect("reps > 0"))
}

/// Monte-Carlo estimates of `q_1..=q_max` from shared renewal paths, one
/// replicate stream per path block.
pub fn mc_renewal_probabilities<T: Scalar>(
    dist: &AgeDistribution<T>,
    max_n: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<SummaryEstimate>> {
    if reps == 0 {
        return Err(Error::invalid("reps", "must be at least 1"));
    }
    const BLOCK: u64 = 10_000;
    let blocks = reps.div_ceil(BLOCK);
    let partial = crate::mc::replicates(seed, blocks, |b, rng| {
        let count = BLOCK.min(reps - b * BLOCK);
        let mut hits = vec![0u64; max_n as usize + 1];
        for _ in 0..count {
            let mut t = dist.sample(rng);
            while t <= max_n {
                hits[t as usize] += 1;
                t = t.saturating_add(dist.sample(rng));
            }
        }
        hits
    });
    let mut hits = vec![0u64; max_n as usize + 1];
    for h in partial {
        for (a, b) in hits.iter_mut().zip(h) {
            *a += b;
        }
    }
    Ok(hits[1..].iter().map(|&h| SummaryEstimate::proportion(h, reps).expect("reps > 0")).collect())
}

fn check_alpha<T: Scalar>(alpha: T, upper: T, what: &str) -> Result<()> {
    if !(alpha > T::zero() && alpha < upper) {
        return Err(Error::invalid("alpha", format!("{what} requires alpha in (0, {upper}), got {alpha}")));
    }
    Ok(())
}

/// Tauberian asymptote of `sum_{n<=i} q_n` for tail `n^-alpha`, `0 < alpha < 1`:
/// `(1 - alpha) / (Gamma(2 - alpha) Gamma(1 + alpha)) i^alpha`.
pub fn tauberian_partial_sum_asymptote<T: Scalar>(alpha: T, i: u64) -> Result<T> {
    check_alpha(alpha, T::one(), "partial-sum asymptote")?;
    let one = T::one();
    let two = lit::<T>(2.0);
    let c = (one - alpha) / (gamma(two - alpha) * gamma(one + alpha));
    Ok(c * lit::<T>(i as f64).powf(alpha))
}

/// Tauberian asymptote of `sum_n q_n q_{n+i}` for tail `n^-alpha`,
/// `0 < alpha < 1/2`: `(1 - alpha)^2 / (Gamma(2 - alpha)^2 Gamma(2 alpha)) i^(2 alpha - 1)`.
pub fn tauberian_cross_sum_asymptote<T: Scalar>(alpha: T, i: u64) -> Result<T> {
    check_alpha(alpha, lit(0.5), "cross-sum asymptote")?;
    let one = T::one();
    let two = lit::<T>(2.0);
    let g = gamma(two - alpha);
    let c = (one - alpha).powi(2) / (g * g * gamma(two * alpha));
    Ok(c * lit::<T>(i as f64).powf(two * alpha - one))
}

/// Leading term of `sum_n q_n q_{n+i}` for tail exactly `n^-alpha`,
/// `0 < alpha < 1/2`, from `q_n ~ n^(alpha - 1) / (Gamma(alpha) Gamma(1 - alpha))`:
/// `Gamma(1 - 2 alpha) / (Gamma(alpha) Gamma(1 - alpha)^3) i^(2 alpha - 1)`.
pub fn cross_sum_leading_term<T: Scalar>(alpha: T, i: u64) -> Result<T> {
    check_alpha(alpha, lit(0.5), "cross-sum leading term")?;
    let one = T::one();
    let g = gamma(one - alpha);
    let c = gamma(one - alpha - alpha) / (gamma(alpha) * g * g * g);
    Ok(c * lit::<T>(i as f64).powf(alpha + alpha - one))
}
