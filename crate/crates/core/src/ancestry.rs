//! Backward-in-time simulation of ancestral lines.
//!
//! Each ancestral line is a renewal process: it jumps back by an age drawn
//! from the age distribution and picks a uniform individual in the landing
//! generation. Lines that land on the same individual merge. Simulation is
//! event driven over renewal times, so long gaps cost nothing.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use serde::Serialize;

use crate::distributions::{AgeDistribution, AgeKind, MeetingRegime};
use crate::mc::replicates;
use crate::renewal::RenewalSequence;
use crate::stats::{wilson_interval, Interval, SummaryEstimate};
use crate::{lit, Error, Result, Scalar};

/// Result of a run that may stop at its horizon before the lines meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CensoredOutcome {
    Merged { tau: u64 },
    Censored { horizon: u64 },
}

impl CensoredOutcome {
    pub fn tau(&self) -> Option<u64> {
        match *self {
            CensoredOutcome::Merged { tau } => Some(tau),
            CensoredOutcome::Censored { .. } => None,
        }
    }

    /// `tau`, or the horizon for a censored run.
    pub fn tau_or_horizon(&self) -> u64 {
        match *self {
            CensoredOutcome::Merged { tau } => tau,
            CensoredOutcome::Censored { horizon } => horizon,
        }
    }
}

fn check_population(n_pop: u32) -> Result<()> {
    if n_pop < 2 {
        return Err(Error::invalid("N", format!("population size must be at least 2, got {n_pop}")));
    }
    Ok(())
}

/// Generations back until the ancestral lines of two distinct individuals of
/// generation 0 meet. At every generation where both lines renew, they pick
/// the same individual with probability `1/N`.
pub fn simulate_pair_tmrca<T: Scalar, R: Rng + ?Sized>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    horizon: u64,
    rng: &mut R,
) -> Result<CensoredOutcome> {
    check_population(n_pop)?;
    if horizon == 0 {
        return Err(Error::invalid("horizon", "must be at least 1"));
    }
    let mut a = dist.sample(rng);
    let mut b = dist.sample(rng);
    while a.min(b) <= horizon {
        if a == b {
            if rng.random_range(0..n_pop) == 0 {
                return Ok(CensoredOutcome::Merged { tau: a });
            }
            a = a.saturating_add(dist.sample(rng));
            b = b.saturating_add(dist.sample(rng));
        } else if a < b {
            a = a.saturating_add(dist.sample(rng));
        } else {
            b = b.saturating_add(dist.sample(rng));
        }
    }
    Ok(CensoredOutcome::Censored { horizon })
}

/// `reps` independent pair runs; replicate `i` uses stream `(seed, i)`.
pub fn run_pair_tmrca<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    horizon: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CensoredOutcome>> {
    check_population(n_pop)?;
    if horizon == 0 || reps == 0 {
        return Err(Error::invalid("reps", "horizon and replicate count must be at least 1"));
    }
    Ok(replicates(seed, reps, |_, rng| {
        simulate_pair_tmrca(n_pop, dist, horizon, rng).expect("parameters checked")
    }))
}

/// Aggregate of pair runs. The mean of `tau` is over merged runs only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSummary {
    pub replicates: u64,
    pub merged: u64,
    pub censored: u64,
    pub horizon: u64,
    /// Fraction of runs that met by the horizon, with a 95% Wilson interval.
    pub met: SummaryEstimate,
    pub met_interval: Interval,
    pub censored_fraction: f64,
    /// Mean `tau` over merged runs; `None` when no run merged.
    pub conditional_mean_tau: Option<SummaryEstimate>,
}

pub fn summarize_pairs(outcomes: &[CensoredOutcome], horizon: u64) -> Result<PairSummary> {
    let reps = outcomes.len() as u64;
    if reps == 0 {
        return Err(Error::invalid("outcomes", "no replicates"));
    }
    let taus: Vec<f64> = outcomes.iter().filter_map(|o| o.tau()).map(|t| t as f64).collect();
    let merged = taus.len() as u64;
    let censored = reps - merged;
    Ok(PairSummary {
        replicates: reps,
        merged,
        censored,
        horizon,
        met: SummaryEstimate::proportion(merged, reps).expect("reps > 0"),
        met_interval: wilson_interval(merged, reps, 1.96)?,
        censored_fraction: censored as f64 / reps as f64,
        conditional_mean_tau: SummaryEstimate::from_samples(&taus).map(|s| s.with_censored(censored)),
    })
}

/// One merger: the labels of all blocks that coalesced in `generation`. The
/// lowest label survives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeEvent {
    pub generation: u64,
    pub blocks: Vec<u32>,
}

/// Merger history of a sample of `n0` individuals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionTrajectory {
    pub n0: u32,
    pub events: Vec<MergeEvent>,
    pub horizon: u64,
    /// Whether a single block remained by the horizon.
    pub completed: bool,
}

impl PartitionTrajectory {
    /// Number of blocks after all mergers up to and including generation `k`.
    pub fn block_count(&self, k: u64) -> u32 {
        let merged: usize = self
            .events
            .iter()
            .take_while(|e| e.generation <= k)
            .map(|e| e.blocks.len() - 1)
            .sum();
        self.n0 - merged as u32
    }

    pub fn first_merger(&self) -> Option<u64> {
        self.events.first().map(|e| e.generation)
    }

    /// Generation of the last merger, if the sample fully coalesced.
    pub fn tmrca(&self) -> Option<u64> {
        if self.completed {
            self.events.last().map(|e| e.generation)
        } else {
            None
        }
    }
}

/// Ancestral partition of a sample of `n` distinct individuals of
/// generation 0, labelled `1..=n`.
pub fn simulate_ancestral_partition<T: Scalar, R: Rng + ?Sized>(
    n_pop: u32,
    n: u32,
    dist: &AgeDistribution<T>,
    horizon: u64,
    rng: &mut R,
) -> Result<PartitionTrajectory> {
    let labels: Vec<u32> = (1..=n).collect();
    simulate_ancestral_partition_labeled(n_pop, &labels, dist, horizon, rng)
}

/// As [`simulate_ancestral_partition`], with the sample's lines started in
/// the order given by `labels` (a permutation of `1..=n`).
pub fn simulate_ancestral_partition_labeled<T: Scalar, R: Rng + ?Sized>(
    n_pop: u32,
    labels: &[u32],
    dist: &AgeDistribution<T>,
    horizon: u64,
    rng: &mut R,
) -> Result<PartitionTrajectory> {
    check_population(n_pop)?;
    let n = labels.len() as u32;
    if n < 2 || n > n_pop {
        return Err(Error::invalid("n", format!("sample size must satisfy 2 <= n <= N = {n_pop}, got {n}")));
    }
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    if sorted != (1..=n).collect::<Vec<_>>() {
        return Err(Error::invalid("labels", "must be a permutation of 1..=n"));
    }
    let mut heap = BinaryHeap::new();
    for &l in labels {
        heap.push(Reverse((dist.sample(rng), l)));
    }
    let mut events = Vec::new();
    let mut alive = n;
    let mut landing: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    let mut renewing = Vec::new();
    while alive > 1 {
        let Some(&Reverse((t, _))) = heap.peek() else { break };
        if t > horizon {
            break;
        }
        renewing.clear();
        while let Some(&Reverse((s, l))) = heap.peek() {
            if s != t {
                break;
            }
            heap.pop();
            renewing.push(l);
        }
        landing.clear();
        for &l in &renewing {
            landing.entry(rng.random_range(0..n_pop)).or_default().push(l);
        }
        for group in landing.values_mut() {
            group.sort_unstable();
            if group.len() > 1 {
                alive -= group.len() as u32 - 1;
                events.push(MergeEvent { generation: t, blocks: group.clone() });
            }
            heap.push(Reverse((t.saturating_add(dist.sample(rng)), group[0])));
        }
    }
    Ok(PartitionTrajectory { n0: n, events, horizon, completed: alive == 1 })
}

/// `(2 / beta^2)(1 - 1/n)`, the expected time to the most recent common
/// ancestor of `n` lines in a coalescent with pair rate `beta^2`.
pub fn expected_kingman_tmrca<T: Scalar>(n: u32, beta: T) -> T {
    let nf = lit::<T>(n as f64);
    lit::<T>(2.0) / (beta * beta) * (T::one() - T::one() / nf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalPoint {
    pub t: f64,
    /// Fraction of runs with `tau > N t`.
    pub estimate: SummaryEstimate,
    pub interval: Interval,
    /// `exp(-beta^2 t)`.
    pub kingman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub n_pop: u32,
    pub beta: f64,
    pub horizon: u64,
    pub points: Vec<SurvivalPoint>,
    /// `N < 100`: the coalescent limit is unlikely to be accurate.
    pub small_population: bool,
    /// `tau / N` per replicate in replicate order; infinite if censored.
    #[serde(skip)]
    pub scaled_times: Vec<f64>,
}

/// Estimates `P(tau > N t)` for a pair of lines at each `t`, alongside the
/// coalescent value `exp(-beta^2 t)`.
pub fn pairwise_no_coalescence_curve<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    times: &[f64],
    reps: u64,
    seed: u64,
) -> Result<SurvivalCurve> {
    let beta = dist
        .beta()
        .ok_or_else(|| Error::Regime("coalescent scaling requires a finite-mean age distribution (E[eta] < inf)".into()))?
        .to_f64()
        .unwrap_or(f64::NAN);
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("times", "must be finite and nonnegative"));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let horizon = (n_pop as f64 * t_max).ceil() as u64 + 1;
    let outcomes = run_pair_tmrca(n_pop, dist, horizon, reps, seed)?;
    let nf = n_pop as f64;
    let scaled_times: Vec<f64> =
        outcomes.iter().map(|o| o.tau().map_or(f64::INFINITY, |t| t as f64 / nf)).collect();
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let survived = scaled_times.iter().filter(|&&s| s > t).count() as u64;
        points.push(SurvivalPoint {
            t,
            estimate: SummaryEstimate::proportion(survived, reps).expect("reps > 0"),
            interval: wilson_interval(survived, reps, 1.96)?,
            kingman: (-beta * beta * t).exp(),
        });
    }
    Ok(SurvivalCurve { n_pop, beta, horizon, points, small_population: n_pop < 100, scaled_times })
}

/// `S = sum_{n=1}^{H} q_n^2`, the expected number of joint renewals of two
/// independent lines after generation 0.
fn joint_renewals<T: Scalar>(seq: &RenewalSequence<T>) -> T {
    seq.sum_q_squared().value - T::one()
}

/// Probability that the lines of two distinct individuals `lag` generations
/// apart ever meet, from the truncated sequence:
/// `sum_{n>=0} q_n q_{n+lag} / (N + S)` for `lag >= 1` and `S / (N + S)` for
/// `lag = 0`, where `S = sum_{n>=1} q_n^2`.
pub fn meeting_probability_from_sequence<T: Scalar>(n_pop: u32, seq: &RenewalSequence<T>, lag: u64) -> T {
    let s = joint_renewals(seq);
    let num = if lag == 0 { s } else { seq.cross_sum(lag).value };
    num / (lit::<T>(n_pop as f64) + s)
}

/// `sum_{n>=0} q_n q_{n+lag} / (N + S)`. At `lag = 0` this is the meeting
/// probability of two independently uniform members of one generation, which
/// may coincide.
pub fn uniform_pair_meeting_probability<T: Scalar>(n_pop: u32, seq: &RenewalSequence<T>, lag: u64) -> T {
    seq.cross_sum(lag).value / (lit::<T>(n_pop as f64) + joint_renewals(seq))
}

fn require_transient<T: Scalar>(dist: &AgeDistribution<T>) -> Result<()> {
    match dist.meeting_regime() {
        MeetingRegime::Transient => Ok(()),
        MeetingRegime::Certain => Err(Error::Regime(
            "requires sum q_n^2 convergent (alpha < 1/2); for alpha > 1/2 or finite mean the lines meet with probability 1".into(),
        )),
        MeetingRegime::Boundary => Err(Error::Regime(
            "requires sum q_n^2 convergent (alpha < 1/2); alpha = 1/2 is undecided without more information on the tail".into(),
        )),
    }
}

/// Relative size of the last-decade increment of `sum q_n^2` above which the
/// truncated sums are rejected.
pub const MEETING_SUM_TOLERANCE: f64 = 1e-2;

/// Meeting probability of two distinct individuals `lag` generations apart,
/// for power laws with `alpha < 1/2`, from sums truncated at `seq`'s horizon.
pub fn meeting_probability_checked<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    seq: &RenewalSequence<T>,
    lag: u64,
) -> Result<T> {
    require_transient(dist)?;
    let diag = seq.sum_q_squared();
    if !diag.converged(lit(MEETING_SUM_TOLERANCE)) {
        return Err(Error::Regime(format!(
            "sum q_n^2 has not converged by H = {} (last decade adds {} of {}); increase the horizon",
            seq.horizon(),
            diag.last_decade_increment,
            diag.value
        )));
    }
    Ok(meeting_probability_from_sequence(n_pop, seq, lag))
}

/// As [`meeting_probability_checked`], computing `q` up to `horizon`.
pub fn exact_meeting_probability<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    lag: u64,
    horizon: u64,
) -> Result<T> {
    require_transient(dist)?;
    let seq = RenewalSequence::compute(dist, horizon.max(lag.saturating_mul(2)).max(10))?;
    meeting_probability_checked(n_pop, dist, &seq, lag)
}

/// Estimate of `sum_{n>H} q_n^2` from regular variation of `q`:
/// `q_H^2 H / (1 - 2 alpha)`.
pub fn joint_renewal_tail<T: Scalar>(dist: &AgeDistribution<T>, seq: &RenewalSequence<T>) -> Result<T> {
    require_transient(dist)?;
    let AgeKind::PowerLaw { alpha } = *dist.kind() else {
        unreachable!("only power laws are transient")
    };
    let h = seq.horizon();
    let q = seq.values()[h as usize];
    Ok(q * q * lit::<T>(h as f64) / (T::one() - alpha - alpha))
}

/// Bound on the gap between the probability of meeting by generation `H` and
/// the truncated formula: `sum_{n>H} q_n^2 / N`.
pub fn meeting_horizon_bias<T: Scalar>(n_pop: u32, dist: &AgeDistribution<T>, seq: &RenewalSequence<T>) -> Result<T> {
    Ok(joint_renewal_tail(dist, seq)? / lit(n_pop as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::stats::ks_statistic;

    fn half_half() -> AgeDistribution<f64> {
        AgeDistribution::explicit(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn dirac_pair_is_geometric() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let out = run_pair_tmrca(100, &d, 1 << 40, 100_000, 1).unwrap();
        let s = summarize_pairs(&out, 1 << 40).unwrap();
        assert_eq!(s.censored, 0);
        let m = s.conditional_mean_tau.unwrap();
        assert!(m.within(100.0, 3.0, 0.0), "{m:?}");
        // P(tau = 1) = 1/N
        let ones = out.iter().filter(|o| o.tau() == Some(1)).count() as u64;
        assert!(SummaryEstimate::proportion(ones, 100_000).unwrap().within(0.01, 3.0, 0.0));
    }

    #[test]
    fn pair_rejects_small_population() {
        let d = half_half();
        assert!(simulate_pair_tmrca(1, &d, 10, &mut stream(0, 0)).is_err());
        assert!(simulate_ancestral_partition(5, 6, &d, 10, &mut stream(0, 0)).is_err());
    }

    #[test]
    fn finite_mean_pair_mean_is_n_times_mean_squared() {
        // joint renewals form a renewal process with mean gap m^2, so E[tau] = N m^2
        let d = half_half();
        let out = run_pair_tmrca(50, &d, 1 << 40, 40_000, 2).unwrap();
        let m = summarize_pairs(&out, 1 << 40).unwrap().conditional_mean_tau.unwrap();
        assert!(m.within(50.0 * 2.25, 3.0, 0.0), "{m:?}");
    }

    #[test]
    fn transient_pair_matches_meeting_formula() {
        let d = AgeDistribution::power_law(0.3f64).unwrap();
        let h = 100_000;
        let seq = RenewalSequence::compute(&d, h).unwrap();
        let exact = meeting_probability_checked(10, &d, &seq, 0).unwrap();
        let bias = meeting_horizon_bias(10, &d, &seq).unwrap();
        let out = run_pair_tmrca(10, &d, h, 100_000, 3).unwrap();
        let s = summarize_pairs(&out, h).unwrap();
        assert!(s.met.within(exact, 3.0, bias), "{:?} {exact} {bias}", s.met);
        // the uniform-pair form counts the individual itself and is far off
        let uniform = uniform_pair_meeting_probability(10, &seq, 0);
        assert!(!s.met.within(uniform, 10.0, bias));
    }

    #[test]
    fn lagged_meeting_matches_simulation() {
        // w sits `lag` generations above v and starts its own line there
        let d = AgeDistribution::power_law(0.3f64).unwrap();
        let (h, lag, n_pop) = (20_000u64, 3u64, 5u32);
        let seq = RenewalSequence::compute(&d, h + lag).unwrap();
        let exact = meeting_probability_from_sequence(n_pop, &seq, lag);
        let bias = meeting_horizon_bias(n_pop, &d, &seq).unwrap();
        let reps = 100_000u64;
        let met = replicates(4, reps, |_, rng| {
            // v's line may land on w itself at generation `lag`
            let mut a = d.sample(rng);
            let mut b = lag;
            while a.min(b) <= h {
                if a == b {
                    if rng.random_range(0..n_pop) == 0 {
                        return true;
                    }
                    a = a.saturating_add(d.sample(rng));
                    b = b.saturating_add(d.sample(rng));
                } else if a < b {
                    a = a.saturating_add(d.sample(rng));
                } else {
                    b = b.saturating_add(d.sample(rng));
                }
            }
            false
        });
        let hits = met.iter().filter(|&&m| m).count() as u64;
        let e = SummaryEstimate::proportion(hits, reps).unwrap();
        assert!(e.within(exact, 3.0, bias), "{e:?} {exact}");
    }

    #[test]
    fn meeting_formula_regimes() {
        let dirac = AgeDistribution::<f64>::dirac(1).unwrap();
        assert!(matches!(exact_meeting_probability(10, &dirac, 0, 100), Err(Error::Regime(_))));
        let heavy = AgeDistribution::power_law(0.7f64).unwrap();
        assert!(matches!(exact_meeting_probability(10, &heavy, 0, 1000), Err(Error::Regime(_))));
        let boundary = AgeDistribution::power_law(0.5f64).unwrap();
        assert!(matches!(exact_meeting_probability(10, &boundary, 0, 1000), Err(Error::Regime(_))));
        // truncated Dirac sums: (H + 1) / (N + H) for the uniform-pair form
        let seq = RenewalSequence::compute(&dirac, 1000).unwrap();
        assert!((uniform_pair_meeting_probability(10, &seq, 0) - 1001.0 / 1010.0).abs() < 1e-12);
        assert!((meeting_probability_from_sequence(10, &seq, 0) - 1000.0 / 1010.0).abs() < 1e-12);
    }

    #[test]
    fn meeting_probability_decreases_with_lag() {
        let d = AgeDistribution::power_law(0.3f64).unwrap();
        let seq = RenewalSequence::compute(&d, 20_000).unwrap();
        let mut prev = f64::INFINITY;
        for lag in [1u64, 2, 5, 10, 100, 1000, 10_000] {
            let p = meeting_probability_from_sequence(10, &seq, lag);
            assert!(p > 0.0 && p < prev, "{lag} {p}");
            prev = p;
        }
    }

    #[test]
    fn partition_pair_matches_pair_simulator() {
        let d = half_half();
        let reps = 10_000u64;
        let pair: Vec<f64> = run_pair_tmrca(100, &d, 1 << 40, reps, 5)
            .unwrap()
            .iter()
            .map(|o| o.tau().unwrap() as f64)
            .collect();
        let part: Vec<f64> = replicates(6, reps, |_, rng| {
            simulate_ancestral_partition(100, 2, &d, 1 << 40, rng).unwrap().tmrca().unwrap() as f64
        });
        // two-sample KS distance
        let mut a = pair.clone();
        let mut b = part.clone();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let mut dmax: f64 = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            dmax = dmax.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
        }
        assert!(dmax < 0.02, "{dmax}");
    }

    #[test]
    fn dirac_three_sample_first_merger() {
        // per-generation chance that some pair of three lines collides:
        // 1 - (1 - 1/N)(1 - 2/N)
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let n_pop = 100u32;
        let firsts: Vec<f64> = replicates(7, 20_000, |_, rng| {
            simulate_ancestral_partition(n_pop, 3, &d, 1 << 40, rng).unwrap().first_merger().unwrap() as f64
        });
        let nf = n_pop as f64;
        let p = 1.0 - (1.0 - 1.0 / nf) * (1.0 - 2.0 / nf);
        let m = SummaryEstimate::from_samples(&firsts).unwrap();
        assert!(m.within(1.0 / p, 3.0, 0.0), "{m:?}");
        assert!((1.0 / p - nf / 3.0).abs() < 1.0);
    }

    #[test]
    fn block_counts_nonincreasing() {
        let d = AgeDistribution::power_law(0.7f64).unwrap();
        for rep in 0..50 {
            let traj = simulate_ancestral_partition(20, 8, &d, 100_000, &mut stream(8, rep)).unwrap();
            let mut prev = traj.n0;
            for e in &traj.events {
                assert!(e.blocks.len() >= 2);
                assert!(e.blocks.windows(2).all(|w| w[0] < w[1]));
                assert!(e.blocks.iter().all(|&l| (1..=8).contains(&l)));
                let c = traj.block_count(e.generation);
                assert!(c < prev && c >= 1);
                prev = c;
            }
            assert_eq!(traj.block_count(0), 8);
            assert_eq!(traj.completed, prev == 1);
        }
    }

    #[test]
    fn partition_is_exchangeable() {
        let d = half_half();
        let reps = 20_000u64;
        let run = |labels: Vec<u32>, seed| -> SummaryEstimate {
            let xs: Vec<f64> = replicates(seed, reps, |_, rng| {
                simulate_ancestral_partition_labeled(30, &labels, &d, 1 << 40, rng).unwrap().first_merger().unwrap()
                    as f64
            });
            SummaryEstimate::from_samples(&xs).unwrap()
        };
        let a = run(vec![1, 2, 3, 4], 9);
        let b = run(vec![3, 1, 4, 2], 9);
        let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!((a.mean - b.mean).abs() <= 3.0 * se, "{a:?} {b:?}");
    }

    #[test]
    fn survival_curve_dirac() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let c = pairwise_no_coalescence_curve(1000, &d, &[0.0, 1.0, 30.0], 10_000, 10).unwrap();
        assert_eq!(c.points[0].estimate.mean, 1.0);
        let p = &c.points[1];
        assert!(p.estimate.within((-1.0f64).exp(), 3.0, 0.0), "{p:?}");
        assert!(!c.small_population);
        let mut xs = c.scaled_times.clone();
        xs.sort_by(f64::total_cmp);
        assert!(ks_statistic(&xs, |x| 1.0 - (-x).exp()).unwrap().p_value > 0.001);
        let inf = AgeDistribution::power_law(0.7f64).unwrap();
        assert!(matches!(pairwise_no_coalescence_curve(100, &inf, &[1.0], 10, 0), Err(Error::Regime(_))));
    }

    #[test]
    fn survival_curve_half_half() {
        let c = pairwise_no_coalescence_curve(2000, &half_half(), &[1.0], 10_000, 11).unwrap();
        let p = &c.points[0];
        assert!((p.kingman - (-4.0f64 / 9.0).exp()).abs() < 1e-15);
        assert!(p.estimate.within(p.kingman, 3.0, 0.0), "{p:?}");
    }

    #[test]
    fn kingman_expectation() {
        assert_eq!(expected_kingman_tmrca(2, 1.0f64), 1.0);
        assert!((expected_kingman_tmrca(2, 2.0f64 / 3.0) - 2.25).abs() < 1e-12);
        assert!((expected_kingman_tmrca(1_000_000, 1.0f64) - 2.0).abs() < 1e-5);
    }

    #[test]
    fn pair_outcome_serializes() {
        let s = serde_json::to_string(&CensoredOutcome::Merged { tau: 4 }).unwrap();
        assert_eq!(s, r#"{"outcome":"merged","tau":4}"#);
    }
}
