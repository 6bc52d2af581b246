//! The urn chain of renewing lineages and its sectioned (coalescing) version.
//!
//! Urn `i` holds the lineages whose next renewal is `i` generations ahead.
//! Each step the balls of urn 1 are relocated by fresh age draws and every
//! other urn moves down by one. Urns are stored under absolute keys
//! `origin + i`, so the shift is `origin += 1` and a ball relocated by `d`
//! lands on key `origin + d` of the new state.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::io::Write;

use num_traits::{FromPrimitive, Num, Signed};
use rand::Rng;
use serde::Serialize;

use crate::distributions::AgeDistribution;
use crate::{lit, Error, Result, Scalar};

/// Ball counts per urn, summing to a fixed total.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UrnState {
    origin: u64,
    counts: BTreeMap<u64, u32>,
    total: u32,
}

impl UrnState {
    /// `counts[0]` is the number of balls in urn 1.
    pub fn from_counts(counts: &[u32]) -> Self {
        let mut s = UrnState::default();
        for (i, &c) in counts.iter().enumerate() {
            s.add(i as u64 + 1, c);
        }
        s
    }

    /// Adds `count` balls to urn `i >= 1`.
    pub fn add(&mut self, i: u64, count: u32) {
        assert!(i >= 1, "urn indices start at 1");
        if count > 0 {
            *self.counts.entry(self.origin + i).or_insert(0) += count;
            self.total += count;
        }
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn count(&self, i: u64) -> u32 {
        self.counts.get(&(self.origin + i)).copied().unwrap_or(0)
    }

    pub fn first_urn(&self) -> u32 {
        self.count(1)
    }

    /// Non-empty urns as `(index, count)` in increasing index.
    pub fn occupied(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.counts.iter().map(move |(&k, &c)| (k - self.origin, c))
    }

    /// Counts of urns `1..=len`.
    pub fn to_vec(&self, len: usize) -> Vec<u32> {
        (1..=len as u64).map(|i| self.count(i)).collect()
    }

    /// One transition: relocate urn 1, shift the rest.
    pub fn step<T: Scalar, R: Rng + ?Sized>(&mut self, dist: &AgeDistribution<T>, rng: &mut R) {
        let moved = self.counts.remove(&(self.origin + 1)).unwrap_or(0);
        self.origin += 1;
        for _ in 0..moved {
            let d = dist.sample(rng);
            *self.counts.entry(self.origin.saturating_add(d)).or_insert(0) += 1;
        }
    }
}

pub fn step_urn<T: Scalar, R: Rng + ?Sized>(
    state: &UrnState,
    dist: &AgeDistribution<T>,
    rng: &mut R,
) -> UrnState {
    let mut next = state.clone();
    next.step(dist, rng);
    next
}

/// Draws a state from the stationary law: each of `n` balls independently in
/// urn `i` with probability `tail(i) / mean`.
pub fn sample_stationary<T: Scalar, R: Rng + ?Sized>(
    n: u32,
    dist: &AgeDistribution<T>,
    rng: &mut R,
) -> Result<UrnState> {
    let mut s = UrnState::default();
    for _ in 0..n {
        s.add(dist.sample_stationary_offset(rng)?, 1);
    }
    Ok(s)
}

fn beta_one<T: Scalar>(dist: &AgeDistribution<T>) -> Result<T> {
    dist.beta().ok_or_else(|| {
        Error::Regime("stationary urn law requires a finite-mean age distribution (E[eta] < inf)".into())
    })
}

/// Multinomial probability of `state` under the stationary law with
/// weights `beta_i = tail(i) / mean`.
pub fn stationary_pmf<T: Scalar>(n: u32, dist: &AgeDistribution<T>, state: &UrnState) -> Result<T> {
    let beta = beta_one(dist)?;
    if state.total() != n {
        return Err(Error::invalid("state", format!("holds {} balls, expected {n}", state.total())));
    }
    let mut p = T::one();
    let mut placed = 0u32;
    for (i, x) in state.occupied() {
        let w = dist.tail(i) * beta;
        for j in 1..=x {
            placed += 1;
            p = p * lit::<T>(placed as f64) / lit::<T>(j as f64) * w;
        }
    }
    Ok(p)
}

/// Number type for the exact stationarity check: floats or exact rationals.
pub trait Field: Num + Signed + Clone + PartialOrd + FromPrimitive + Debug {}

impl<F> Field for F where F: Num + Signed + Clone + PartialOrd + FromPrimitive + Debug {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityCheck<F> {
    /// `max_y |sum_x nu(x) P(x -> y) - nu(y)|`.
    pub max_residual: F,
    pub states: usize,
    /// `sum_y nu(y)`, which should be one.
    pub total_mass: F,
}

/// Largest state space the exact check enumerates.
pub const MAX_ENUMERATED_STATES: u128 = 1_000_000;

fn from_u64<F: Field>(x: u64) -> F {
    F::from_u64(x).expect("integer representable")
}

fn multinomial<F: Field>(counts: &[u32], weights: &[F]) -> F {
    let mut p = F::one();
    let mut placed = 0u64;
    for (&x, w) in counts.iter().zip(weights) {
        for j in 1..=x as u64 {
            placed += 1;
            p = p * from_u64::<F>(placed) / from_u64::<F>(j) * w.clone();
        }
    }
    p
}

fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(rem: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in (0..=rem).rev() {
            cur.push(x);
            rec(rem - x, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Applies one step of the urn chain to the stationary law on the finite state
/// space of a distribution with support `{1..=pmf.len()}` and returns the
/// largest deviation from stationarity.
pub fn stationarity_residual<F: Field>(n: u32, pmf: &[F]) -> Result<StationarityCheck<F>> {
    let j = pmf.len();
    if j == 0 || n == 0 {
        return Err(Error::invalid("n", "need n >= 1 and a non-empty pmf"));
    }
    let states = binomial(n as u128 + j as u128 - 1, j as u128 - 1);
    if states > MAX_ENUMERATED_STATES {
        return Err(Error::Resource(format!(
            "{states} states exceed the enumeration limit {MAX_ENUMERATED_STATES}"
        )));
    }
    let mut tails = vec![F::zero(); j];
    let mut acc = F::zero();
    for k in (0..j).rev() {
        acc = acc + pmf[k].clone();
        tails[k] = acc.clone();
    }
    let mean = tails.iter().cloned().fold(F::zero(), |a, b| a + b);
    let beta: Vec<F> = tails.iter().map(|t| t.clone() / mean.clone()).collect();

    let space = compositions(n, j);
    let index: HashMap<&[u32], usize> = space.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let nu: Vec<F> = space.iter().map(|x| multinomial(x, &beta)).collect();
    let mut flow = vec![F::zero(); space.len()];
    let mut moves_cache: HashMap<u32, Vec<(Vec<u32>, F)>> = HashMap::new();
    let mut y = vec![0u32; j];
    for (x, nu_x) in space.iter().zip(&nu) {
        let moved = x[0];
        let moves = moves_cache
            .entry(moved)
            .or_insert_with(|| compositions(moved, j).into_iter().map(|r| { let p = multinomial(&r, pmf); (r, p) }).collect());
        for (r, p) in moves.iter() {
            for k in 0..j {
                y[k] = r[k] + if k + 1 < j { x[k + 1] } else { 0 };
            }
            let target = index[y.as_slice()];
            flow[target] = flow[target].clone() + nu_x.clone() * p.clone();
        }
    }
    let mut worst = F::zero();
    for (f, v) in flow.iter().zip(&nu) {
        let d = (f.clone() - v.clone()).abs();
        if d > worst {
            worst = d;
        }
    }
    let total_mass = nu.iter().cloned().fold(F::zero(), |a, b| a + b);
    Ok(StationarityCheck { max_residual: worst, states: space.len(), total_mass })
}

/// Exact stationarity check for a finitely supported age distribution.
pub fn verify_stationarity_exact<T: Scalar>(
    n: u32,
    dist: &AgeDistribution<T>,
) -> Result<StationarityCheck<T>> {
    let width = dist.support_max().ok_or_else(|| {
        Error::invalid("dist", "exact check needs finite support; truncate the distribution first")
    })?;
    stationarity_residual(n, &dist.pmf_table(width as usize))
}

/// Leading `1/N` term of the probability of exactly one merger in the next
/// step of the sectioned chain from `state`:
/// `(1/N) sum_i (x_1 x_{i+1} mu(i) + C(x_1, 2) mu(i)^2)`.
pub fn single_merger_probability_leading<T: Scalar>(
    state: &UrnState,
    dist: &AgeDistribution<T>,
    sections: u32,
) -> T {
    let x1 = lit::<T>(state.first_urn() as f64);
    let mut resident = T::zero();
    for (i, x) in state.occupied() {
        if i >= 2 {
            resident = resident + lit::<T>(x as f64) * dist.pmf(i - 1);
        }
    }
    let pairs = x1 * (x1 - T::one()) / lit(2.0);
    (x1 * resident + pairs * dist.pmf_sum_of_squares()) / lit(sections as f64)
}

/// Law of the number of mergers in the next sectioned step from `state`
/// (element `k` is `P(k mergers)`), for a finitely supported distribution.
/// Residents of an urn occupy distinct sections.
pub fn exact_merger_distribution<T: Scalar>(
    state: &UrnState,
    dist: &AgeDistribution<T>,
    sections: u32,
) -> Result<Vec<T>> {
    let width = dist.support_max().ok_or_else(|| {
        Error::invalid("dist", "exact merger law needs finite support; truncate the distribution first")
    })? as usize;
    if sections < state.total() {
        return Err(Error::invalid("sections", "must be at least the number of balls"));
    }
    let moved = state.first_urn();
    let pmf = dist.pmf_table(width);
    let nf = lit::<T>(sections as f64);
    let mut law = vec![T::zero(); moved as usize + 1];
    for r in compositions(moved, width) {
        let p = multinomial(&r, &pmf);
        if p.is_zero() {
            continue;
        }
        // per-urn merger laws, convolved
        let mut acc = vec![T::one()];
        for (d, &m) in r.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let residents = state.count(d as u64 + 2) as usize;
            let mut occ = vec![T::zero(); residents + m as usize + 1];
            occ[residents] = T::one();
            for step in 0..m as usize {
                let mut next = vec![T::zero(); occ.len()];
                for s in residents..=residents + step {
                    let sf = lit::<T>(s as f64);
                    next[s] = next[s] + occ[s] * sf / nf;
                    next[s + 1] = next[s + 1] + occ[s] * (nf - sf) / nf;
                }
                occ = next;
            }
            // mergers = residents + m - occupied
            let urn_law: Vec<T> = (0..=m as usize).map(|k| occ[residents + m as usize - k]).collect();
            let mut conv = vec![T::zero(); acc.len() + urn_law.len() - 1];
            for (a, &pa) in acc.iter().enumerate() {
                for (b, &pb) in urn_law.iter().enumerate() {
                    conv[a + b] = conv[a + b] + pa * pb;
                }
            }
            acc = conv;
        }
        for (k, v) in acc.into_iter().enumerate() {
            law[k] = law[k] + p * v;
        }
    }
    Ok(law)
}

/// `beta_1^2 C(n, 2) / N`, the stationary single-merger rate.
pub fn stationary_merger_rate<T: Scalar>(n: u32, dist: &AgeDistribution<T>, sections: u32) -> Result<T> {
    let b = beta_one(dist)?;
    let nf = lit::<T>(n as f64);
    Ok(b * b * nf * (nf - T::one()) / lit(2.0) / lit(sections as f64))
}

/// Urn chain with `N` sections per urn; balls sharing an `(urn, section)`
/// cell are merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionedUrnState {
    sections: u32,
    origin: u64,
    balls: BTreeSet<(u64, u32)>,
}

impl SectionedUrnState {
    /// Balls given as `(urn index >= 1, section in 1..=N)`; duplicates merge.
    pub fn new(sections: u32, balls: &[(u64, u32)]) -> Result<Self> {
        if sections == 0 {
            return Err(Error::invalid("sections", "must be at least 1"));
        }
        let mut set = BTreeSet::new();
        for &(i, s) in balls {
            if i == 0 || s == 0 || s > sections {
                return Err(Error::invalid("balls", format!("({i}, {s}) outside urn >= 1, section 1..={sections}")));
            }
            set.insert((i, s));
        }
        Ok(SectionedUrnState { sections, origin: 0, balls: set })
    }

    /// Places the balls of `state` into sections `1, 2, ...` within each urn.
    pub fn from_urn_state(state: &UrnState, sections: u32) -> Result<Self> {
        let mut balls = Vec::new();
        for (i, x) in state.occupied() {
            if x > sections {
                return Err(Error::invalid("sections", format!("urn {i} holds {x} balls")));
            }
            balls.extend((1..=x).map(|s| (i, s)));
        }
        Self::new(sections, &balls)
    }

    pub fn sections(&self) -> u32 {
        self.sections
    }

    pub fn ball_count(&self) -> u32 {
        self.balls.len() as u32
    }

    pub fn first_urn_count(&self) -> u32 {
        let key = self.origin + 1;
        self.balls.range((key, 0)..=(key, u32::MAX)).count() as u32
    }

    /// Ball counts by urn, forgetting sections.
    pub fn urn_state(&self) -> UrnState {
        let mut s = UrnState::default();
        for &(k, _) in &self.balls {
            s.add(k - self.origin, 1);
        }
        s
    }

    /// One step; returns the number of mergers.
    pub fn step<T: Scalar, R: Rng + ?Sized>(&mut self, dist: &AgeDistribution<T>, rng: &mut R) -> u32 {
        let key = self.origin + 1;
        let moving: Vec<(u64, u32)> = self.balls.range((key, 0)..=(key, u32::MAX)).copied().collect();
        for b in &moving {
            self.balls.remove(b);
        }
        self.origin += 1;
        let mut mergers = 0;
        for _ in 0..moving.len() {
            let d = dist.sample(rng);
            let s = rng.random_range(1..=self.sections);
            if !self.balls.insert((self.origin.saturating_add(d), s)) {
                mergers += 1;
            }
        }
        mergers
    }
}

pub fn step_sectioned<T: Scalar, R: Rng + ?Sized>(
    state: &SectionedUrnState,
    dist: &AgeDistribution<T>,
    rng: &mut R,
) -> (SectionedUrnState, u32) {
    let mut next = state.clone();
    let m = next.step(dist, rng);
    (next, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrajectoryRow {
    pub step: u64,
    pub first_urn: u32,
    pub balls: u32,
    pub mergers: u32,
}

/// Runs the sectioned chain for `steps` steps (row 0 is the initial state).
pub fn run_sectioned<T: Scalar, R: Rng + ?Sized>(
    mut state: SectionedUrnState,
    dist: &AgeDistribution<T>,
    steps: u64,
    rng: &mut R,
) -> Vec<TrajectoryRow> {
    let mut rows = Vec::with_capacity(steps as usize + 1);
    rows.push(TrajectoryRow { step: 0, first_urn: state.first_urn_count(), balls: state.ball_count(), mergers: 0 });
    for k in 1..=steps {
        let mergers = state.step(dist, rng);
        rows.push(TrajectoryRow { step: k, first_urn: state.first_urn_count(), balls: state.ball_count(), mergers });
    }
    rows
}

/// CSV with header `step,first_urn,balls,mergers`.
pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,first_urn,balls,mergers")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.step, r.first_urn, r.balls, r.mergers)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::stats::{chi_square_gof, SummaryEstimate};
    use crate::Rational;
    use proptest::prelude::*;

    fn half_half() -> AgeDistribution<f64> {
        AgeDistribution::explicit(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn shift_without_relocation() {
        let mut s = UrnState::from_counts(&[0, 2, 1]);
        s.step(&half_half(), &mut stream(0, 0));
        assert_eq!(s.to_vec(3), vec![2, 1, 0]);
    }

    #[test]
    fn dirac_keeps_balls_in_first_urn() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let mut s = UrnState::from_counts(&[4]);
        let mut rng = stream(0, 1);
        for _ in 0..10 {
            s.step(&d, &mut rng);
            assert_eq!(s.to_vec(2), vec![4, 0]);
        }
    }

    #[test]
    fn binomial_first_urn() {
        let d = half_half();
        let mut rng = stream(4, 0);
        let mut counts = [0u64; 3];
        let start = UrnState::from_counts(&[2]);
        for _ in 0..100_000 {
            counts[step_urn(&start, &d, &mut rng).first_urn() as usize] += 1;
        }
        for (k, &p) in [0.25, 0.5, 0.25].iter().enumerate() {
            let e = SummaryEstimate::proportion(counts[k], 100_000).unwrap();
            assert!(e.within(p, 3.0, 0.0), "{k} {e:?}");
        }
    }

    #[test]
    fn stationary_pmf_examples() {
        let d = half_half();
        let p = |c: &[u32], n| stationary_pmf(n, &d, &UrnState::from_counts(c)).unwrap();
        assert!((p(&[1], 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((p(&[0, 1], 1) - 1.0 / 3.0).abs() < 1e-15);
        assert!((p(&[2], 2) - 4.0 / 9.0).abs() < 1e-15);
        assert!((p(&[1, 1], 2) - 4.0 / 9.0).abs() < 1e-15);
        assert!((p(&[0, 2], 2) - 1.0 / 9.0).abs() < 1e-15);
        assert!(stationary_pmf(3, &d, &UrnState::from_counts(&[2])).is_err());
        let inf = AgeDistribution::power_law(0.5f64).unwrap();
        assert!(matches!(stationary_pmf(1, &inf, &UrnState::from_counts(&[1])), Err(Error::Regime(_))));
    }

    #[test]
    fn exact_stationarity_float() {
        for pmf in [vec![0.5, 0.5], vec![0.3, 0.3, 0.4]] {
            let d = AgeDistribution::explicit(pmf).unwrap();
            let check = verify_stationarity_exact(2, &d).unwrap();
            assert!(check.max_residual <= 1e-12, "{check:?}");
            assert!((check.total_mass - 1.0).abs() < 1e-12);
        }
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let check = verify_stationarity_exact(3, &d).unwrap();
        assert_eq!(check.states, 1);
        assert_eq!(check.max_residual, 0.0);
        assert!(verify_stationarity_exact(2, &AgeDistribution::power_law(1.5f64).unwrap()).is_err());
    }

    #[test]
    fn exact_stationarity_rational() {
        let pmf = [Rational::new(3, 10), Rational::new(3, 10), Rational::new(2, 5)];
        for n in 1..=4 {
            let check = stationarity_residual(n, &pmf).unwrap();
            assert_eq!(check.max_residual, Rational::from_integer(0));
            assert_eq!(check.total_mass, Rational::from_integer(1));
        }
        let truncated = AgeDistribution::power_law(1.5f64).unwrap().truncate(6).unwrap();
        assert!(verify_stationarity_exact(3, &truncated).unwrap().max_residual < 1e-12);
    }

    #[test]
    fn enumeration_limit() {
        let pmf = vec![0.01f64; 100];
        assert!(matches!(stationarity_residual(10, &pmf), Err(Error::Resource(_))));
    }

    // Oracle: enumerate destinations and section labels of the relocated balls
    // explicitly; residents sit in sections 0, 1, ... of their urn.
    fn brute_force_merger_law(x: &[u32], pmf: &[f64], n: u32) -> Vec<f64> {
        let moved = x[0] as usize;
        let w = pmf.len();
        let mut law = vec![0.0; moved + 1];
        let combos = (w * n as usize).pow(moved as u32);
        for code in 0..combos {
            let mut c = code;
            let mut cells: Vec<(usize, u32)> = Vec::new();
            let mut p = 1.0;
            for _ in 0..moved {
                let d = c % w;
                c /= w;
                let s = (c % n as usize) as u32;
                c /= n as usize;
                p *= pmf[d] / n as f64;
                cells.push((d + 1, s));
            }
            let mut occupied: BTreeSet<(usize, u32)> = BTreeSet::new();
            for (i, &xi) in x.iter().enumerate().skip(1) {
                for s in 0..xi {
                    occupied.insert((i, s));
                }
            }
            let before = occupied.len() + moved;
            for cell in cells {
                occupied.insert(cell);
            }
            law[before - occupied.len()] += p;
        }
        law
    }

    #[test]
    fn merger_law_matches_enumeration() {
        for (x, pmf) in [
            (vec![2u32, 0, 0], vec![1.0]),
            (vec![1, 1, 0], vec![0.5, 0.5]),
            (vec![2, 1, 1], vec![0.5, 0.5]),
            (vec![3, 1, 0], vec![0.3, 0.3, 0.4]),
        ] {
            let d = AgeDistribution::explicit(pmf.clone()).unwrap();
            let state = UrnState::from_counts(&x);
            for &n in &[7u32, 10] {
                let exact = exact_merger_distribution(&state, &d, n).unwrap();
                let brute = brute_force_merger_law(&x, &pmf, n);
                for (a, b) in exact.iter().zip(&brute) {
                    assert!((a - b).abs() < 1e-12, "{x:?} {n} {exact:?} {brute:?}");
                }
            }
        }
    }

    #[test]
    fn leading_term_examples() {
        let dirac = AgeDistribution::<f64>::dirac(1).unwrap();
        let a = single_merger_probability_leading(&UrnState::from_counts(&[2]), &dirac, 100);
        assert!((a - 0.01).abs() < 1e-15);
        let exact = exact_merger_distribution(&UrnState::from_counts(&[2]), &dirac, 100).unwrap();
        assert!((exact[1] - 0.01).abs() < 1e-15);
        let b = single_merger_probability_leading(&UrnState::from_counts(&[1, 1]), &dirac, 50);
        assert!((b - 0.02).abs() < 1e-15);
        let c = single_merger_probability_leading(&UrnState::from_counts(&[0, 3, 1]), &half_half(), 50);
        assert_eq!(c, 0.0);
    }

    #[test]
    fn merger_rate_values() {
        let dirac = AgeDistribution::<f64>::dirac(1).unwrap();
        assert!((stationary_merger_rate(2, &dirac, 40).unwrap() - 1.0 / 40.0).abs() < 1e-15);
        let r = stationary_merger_rate(2, &half_half(), 100).unwrap();
        assert!((r - 0.004_444_444_444_444_444).abs() < 1e-15);
        assert!(stationary_merger_rate(2, &AgeDistribution::power_law(0.9f64).unwrap(), 100).is_err());
    }

    #[test]
    fn remainder_scales_as_inverse_square() {
        // three relocated balls: the exact single-merger probability differs
        // from the leading term at order N^-2
        let dirac = AgeDistribution::<f64>::dirac(1).unwrap();
        let state = UrnState::from_counts(&[3]);
        for &n in &[10u32, 100, 1000] {
            let exact = exact_merger_distribution(&state, &dirac, n).unwrap()[1];
            let lead = single_merger_probability_leading(&state, &dirac, n);
            let nf = n as f64;
            assert!((exact - 3.0 * (nf - 1.0) / (nf * nf)).abs() < 1e-15);
            assert!(((lead - exact) * nf * nf - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sectioned_pair_merges_at_rate_one_over_n() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let start = SectionedUrnState::new(100, &[(1, 1), (1, 2)]).unwrap();
        let mut rng = stream(9, 0);
        let steps = 100_000u64;
        let merged = (0..steps).filter(|_| step_sectioned(&start, &d, &mut rng).1 == 1).count() as u64;
        let e = SummaryEstimate::proportion(merged, steps).unwrap();
        assert!(e.within(0.01, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn single_ball_never_merges() {
        let d = AgeDistribution::power_law(0.4f64).unwrap();
        let rows = run_sectioned(SectionedUrnState::new(3, &[(1, 1)]).unwrap(), &d, 500, &mut stream(1, 1));
        assert!(rows.iter().all(|r| r.balls == 1 && r.mergers == 0));
        let mut buf = Vec::new();
        write_trajectory_csv(&rows[..2], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("step,first_urn,balls,mergers\n0,"));
    }

    #[test]
    fn sectioned_construction() {
        let s = SectionedUrnState::new(5, &[(1, 2), (1, 2), (3, 1)]).unwrap();
        assert_eq!(s.ball_count(), 2);
        assert!(SectionedUrnState::new(5, &[(0, 1)]).is_err());
        assert!(SectionedUrnState::new(5, &[(1, 6)]).is_err());
        let u = UrnState::from_counts(&[2, 0, 1]);
        let s = SectionedUrnState::from_urn_state(&u, 4).unwrap();
        assert_eq!(s.urn_state(), u);
        assert_eq!(s.first_urn_count(), 2);
    }

    #[test]
    fn first_urn_marginal_is_stationary() {
        // started from nu^3, X_1 after a few steps is Binomial(3, beta_1)
        let d = half_half();
        let mut rng = stream(12, 0);
        let mut counts = [0u64; 4];
        for _ in 0..100_000 {
            let mut s = sample_stationary(3, &d, &mut rng).unwrap();
            for _ in 0..4 {
                s.step(&d, &mut rng);
            }
            counts[s.first_urn() as usize] += 1;
        }
        let b: f64 = 2.0 / 3.0;
        let probs: Vec<f64> = (0..4)
            .map(|k| [1.0, 3.0, 3.0, 1.0][k] * b.powi(k as i32) * (1.0 - b).powi(3 - k as i32))
            .collect();
        let r = chi_square_gof(&counts, &probs).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
    }

    proptest! {
        #[test]
        fn step_conserves_total(counts in proptest::collection::vec(0u32..4, 1..6), seed in 0u64..1000) {
            let d = AgeDistribution::power_law(0.7f64).unwrap();
            let mut s = UrnState::from_counts(&counts);
            let total = s.total();
            let mut rng = stream(seed, 0);
            for _ in 0..20 {
                s.step(&d, &mut rng);
                prop_assert_eq!(s.occupied().map(|(_, c)| c).sum::<u32>(), total);
            }
        }

        #[test]
        fn sectioned_ball_count_nonincreasing(n in 1u32..6, sections in 1u32..8, seed in 0u64..1000) {
            let d = AgeDistribution::explicit(vec![0.6, 0.4]).unwrap();
            let balls: Vec<(u64, u32)> = (0..n).map(|i| (1 + (i % 2) as u64, 1 + i % sections)).collect();
            let rows = run_sectioned(SectionedUrnState::new(sections, &balls).unwrap(), &d, 50, &mut stream(seed, 2));
            for w in rows.windows(2) {
                prop_assert!(w[1].balls <= w[0].balls);
                prop_assert_eq!(w[0].balls - w[1].balls, w[1].mergers);
            }
        }
    }
}
