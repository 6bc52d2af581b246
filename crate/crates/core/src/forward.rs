//! Forward-in-time genealogy over a finite window of generations.
//!
//! Every individual `(i, k)` picks a parent `eta` generations earlier (`eta`
//! drawn from the age distribution) and uniform among the `N` individuals
//! there. Connected components of the resulting forest share a type, drawn
//! once per component. The window materializes generations `-(T + B)..=0`;
//! parents below it become external roots keyed by their coordinate.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::ancestry::{joint_renewal_tail, meeting_probability_checked};
use crate::distributions::{AgeDistribution, MeetingRegime};
use crate::dsu::DisjointSets;
use crate::mc::replicates;
use crate::renewal::{tauberian_cross_sum_asymptote, RenewalSequence};
use crate::stats::SummaryEstimate;
use crate::{lit, Error, Result, Scalar};

/// Default memory budget for a window and its labeling.
pub const WINDOW_MEMORY_BUDGET_BYTES: usize = 1 << 30;

const BYTES_PER_VERTEX: usize = 40;

/// Parent of a vertex: `offset` generations back, individual `label`
/// (zero based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParentRef {
    pub offset: u64,
    pub label: u32,
}

/// Coordinate below the window: `depth >= 1` generations under row 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExternalCoord {
    pub depth: u64,
    pub label: u32,
}

#[derive(Debug, Clone)]
pub struct GenealogyWindow {
    n_pop: u32,
    depth: u64,
    burn_in: u64,
    /// Row `r` holds generation `r - (T + B)`; vertex `(r, k)` is at `r N + k`.
    parents: Vec<ParentRef>,
}

pub enum Parent {
    Vertex(usize),
    External(ExternalCoord),
}

impl GenealogyWindow {
    pub fn n_pop(&self) -> u32 {
        self.n_pop
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in
    }

    pub fn rows(&self) -> usize {
        (self.depth + self.burn_in + 1) as usize
    }

    pub fn vertex_count(&self) -> usize {
        self.parents.len()
    }

    pub fn generation_of_row(&self, row: usize) -> i64 {
        row as i64 - (self.depth + self.burn_in) as i64
    }

    pub fn row_of_generation(&self, generation: i64) -> Option<usize> {
        let r = generation + (self.depth + self.burn_in) as i64;
        (0..self.rows() as i64).contains(&r).then_some(r as usize)
    }

    pub fn vertex(&self, row: usize, label: u32) -> usize {
        row * self.n_pop as usize + label as usize
    }

    pub fn parent_ref(&self, v: usize) -> ParentRef {
        self.parents[v]
    }

    pub fn parent(&self, v: usize) -> Parent {
        let n = self.n_pop as usize;
        let row = (v / n) as u64;
        let p = self.parents[v];
        if p.offset <= row {
            Parent::Vertex((row - p.offset) as usize * n + p.label as usize)
        } else {
            Parent::External(ExternalCoord { depth: p.offset - row, label: p.label })
        }
    }

    /// Row range of generations `-T..=0`.
    pub fn interior_rows(&self) -> std::ops::Range<usize> {
        self.burn_in as usize..self.rows()
    }
}

/// Samples a window of `T + B + 1` generations of `N` individuals.
pub fn build_genealogy<T: Scalar, R: Rng + ?Sized>(
    n_pop: u32,
    depth: u64,
    burn_in: u64,
    dist: &AgeDistribution<T>,
    rng: &mut R,
) -> Result<GenealogyWindow> {
    build_genealogy_with_budget(n_pop, depth, burn_in, dist, WINDOW_MEMORY_BUDGET_BYTES, rng)
}

pub fn build_genealogy_with_budget<T: Scalar, R: Rng + ?Sized>(
    n_pop: u32,
    depth: u64,
    burn_in: u64,
    dist: &AgeDistribution<T>,
    budget: usize,
    rng: &mut R,
) -> Result<GenealogyWindow> {
    if n_pop == 0 || depth == 0 {
        return Err(Error::invalid("N", "population size and window depth must be at least 1"));
    }
    let rows = depth.checked_add(burn_in).and_then(|x| x.checked_add(1));
    let vertices = rows.and_then(|r| r.checked_mul(n_pop as u64)).filter(|&v| v < u32::MAX as u64);
    let bytes = vertices.and_then(|v| (v as usize).checked_mul(BYTES_PER_VERTEX));
    match bytes {
        Some(b) if b <= budget => {}
        _ => {
            return Err(Error::Resource(format!(
                "window of {n_pop} x ({depth} + {burn_in} + 1) vertices exceeds the memory budget of {budget} bytes"
            )))
        }
    }
    let count = vertices.expect("checked") as usize;
    let mut parents = Vec::with_capacity(count);
    for _ in 0..count {
        let offset = dist.sample(rng);
        let label = rng.random_range(0..n_pop);
        parents.push(ParentRef { offset, label });
    }
    Ok(GenealogyWindow { n_pop, depth, burn_in, parents })
}

/// Connected components of the window's forest, edge direction ignored.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    /// Component id per vertex, dense in order of first appearance.
    pub component: Vec<u32>,
    /// Component id per external root.
    pub external: HashMap<ExternalCoord, u32>,
    pub count: u32,
    /// Fraction of interior vertices whose ancestral line leaves the window.
    pub exit_fraction: f64,
}

fn union_rows(window: &GenealogyWindow, rows: usize) -> (DisjointSets, HashMap<ExternalCoord, u32>) {
    let n = window.n_pop as usize;
    let mut external: HashMap<ExternalCoord, u32> = HashMap::new();
    let mut ext_order = Vec::new();
    for v in 0..window.vertex_count() {
        if let Parent::External(c) = window.parent(v) {
            if !external.contains_key(&c) {
                external.insert(c, (window.vertex_count() + ext_order.len()) as u32);
                ext_order.push(c);
            }
        }
    }
    let mut dsu = DisjointSets::new(window.vertex_count() + ext_order.len());
    for v in 0..rows * n {
        match window.parent(v) {
            Parent::Vertex(u) => dsu.union(v as u32, u as u32),
            Parent::External(c) => dsu.union(v as u32, external[&c]),
        }
    }
    (dsu, external)
}

fn dense_ids(dsu: &mut DisjointSets, size: usize, nodes: impl Iterator<Item = u32>) -> (Vec<u32>, u32) {
    let mut ids = vec![u32::MAX; size];
    let mut count = 0u32;
    let mut out = Vec::new();
    for x in nodes {
        let root = dsu.find(x) as usize;
        if ids[root] == u32::MAX {
            ids[root] = count;
            count += 1;
        }
        out.push(ids[root]);
    }
    (out, count)
}

pub fn label_components(window: &GenealogyWindow) -> ComponentLabeling {
    let rows = window.rows();
    let (mut dsu, external) = union_rows(window, rows);
    let verts = window.vertex_count();
    let mut ext_nodes: Vec<(ExternalCoord, u32)> = external.into_iter().collect();
    ext_nodes.sort_by_key(|&(_, node)| node);
    let nodes = (0..verts as u32).chain(ext_nodes.iter().map(|&(_, node)| node));
    let (ids, count) = dense_ids(&mut dsu, verts + ext_nodes.len(), nodes);
    let component = ids[..verts].to_vec();
    let external = ext_nodes.iter().zip(&ids[verts..]).map(|(&(c, _), &id)| (c, id)).collect();

    let mut exits = vec![false; verts];
    for v in 0..verts {
        exits[v] = match window.parent(v) {
            Parent::Vertex(u) => exits[u],
            Parent::External(_) => true,
        };
    }
    let interior = window.interior_rows();
    let n = window.n_pop as usize;
    let inside = &exits[interior.start * n..interior.end * n];
    let exit_fraction = inside.iter().filter(|&&e| e).count() as f64 / inside.len() as f64;
    ComponentLabeling { component, external, count, exit_fraction }
}

/// Types per vertex; `true` is type `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeField {
    pub n_pop: u32,
    pub types: Vec<bool>,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// One Bernoulli(`p`) type per component, in component-id order.
pub fn assign_types<R: Rng + ?Sized>(labeling: &ComponentLabeling, n_pop: u32, p: f64, rng: &mut R) -> Result<TypeField> {
    check_p(p)?;
    let draws: Vec<bool> = (0..labeling.count).map(|_| rng.random::<f64>() < p).collect();
    Ok(TypeField { n_pop, types: labeling.component.iter().map(|&c| draws[c as usize]).collect() })
}

/// Number of vertices whose type differs from their in-window parent's.
pub fn type_violations(window: &GenealogyWindow, types: &TypeField) -> usize {
    (0..window.vertex_count())
        .filter(|&v| matches!(window.parent(v), Parent::Vertex(u) if types.types[u] != types.types[v]))
        .count()
}

/// Fraction of type `a` per generation of the interior rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencySeries {
    pub generations: Vec<i64>,
    pub y: Vec<f64>,
}

impl FrequencySeries {
    pub fn at(&self, generation: i64) -> Option<f64> {
        let first = *self.generations.first()?;
        self.y.get(usize::try_from(generation - first).ok()?).copied()
    }

    /// CSV with header `generation,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "generation,y")?;
        for (g, y) in self.generations.iter().zip(&self.y) {
            writeln!(w, "{g},{y:.16e}")?;
        }
        Ok(())
    }
}

pub fn compute_frequency_series(window: &GenealogyWindow, types: &TypeField) -> FrequencySeries {
    let n = window.n_pop as usize;
    let rows = window.interior_rows();
    let generations = rows.clone().map(|r| window.generation_of_row(r)).collect();
    let y = rows
        .map(|r| types.types[r * n..(r + 1) * n].iter().filter(|&&a| a).count() as f64 / n as f64)
        .collect();
    FrequencySeries { generations, y }
}

/// Types of every vertex in rows `0..=boundary_row` and of every external
/// root.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTypes {
    pub boundary_row: usize,
    pub vertices: Vec<bool>,
    pub external: HashMap<ExternalCoord, bool>,
}

/// Types the forest restricted to rows `0..=boundary_row` (plus every
/// external root) with one Bernoulli(`p`) draw per component.
pub fn sample_boundary_types<R: Rng + ?Sized>(
    window: &GenealogyWindow,
    boundary_row: usize,
    p: f64,
    rng: &mut R,
) -> Result<BoundaryTypes> {
    check_p(p)?;
    if boundary_row >= window.rows() {
        return Err(Error::invalid("boundary_row", format!("window has {} rows", window.rows())));
    }
    let n = window.n_pop as usize;
    let cut = (boundary_row + 1) * n;
    let (mut dsu, external) = union_rows(window, boundary_row + 1);
    let mut ext_nodes: Vec<(ExternalCoord, u32)> = external.into_iter().collect();
    ext_nodes.sort_by_key(|&(_, node)| node);
    let nodes = (0..cut as u32).chain(ext_nodes.iter().map(|&(_, node)| node));
    let (ids, count) = dense_ids(&mut dsu, window.vertex_count() + ext_nodes.len(), nodes);
    let draws: Vec<bool> = (0..count).map(|_| rng.random::<f64>() < p).collect();
    Ok(BoundaryTypes {
        boundary_row,
        vertices: ids[..cut].iter().map(|&c| draws[c as usize]).collect(),
        external: ext_nodes.iter().zip(&ids[cut..]).map(|(&(c, _), &id)| (c, draws[id as usize])).collect(),
    })
}

/// Types every vertex above the boundary with the type of its first ancestor
/// at or below the boundary. Uncovered external roots are reported as
/// `(generation, label)` with one-based labels.
pub fn propagate_types_conditional(window: &GenealogyWindow, boundary: &BoundaryTypes) -> Result<TypeField> {
    let n = window.n_pop as usize;
    let cut = (boundary.boundary_row + 1) * n;
    if boundary.vertices.len() < cut.min(window.vertex_count()) {
        let missing = (boundary.vertices.len()..cut)
            .map(|v| (window.generation_of_row(v / n), (v % n) as u32 + 1))
            .collect();
        return Err(Error::IncompleteBoundary(missing));
    }
    let mut types = Vec::with_capacity(window.vertex_count());
    types.extend_from_slice(&boundary.vertices[..cut]);
    let mut missing = Vec::new();
    let base = window.generation_of_row(0);
    for v in cut..window.vertex_count() {
        let t = match window.parent(v) {
            Parent::Vertex(u) => types[u],
            Parent::External(c) => match boundary.external.get(&c) {
                Some(&t) => t,
                None => {
                    missing.push((base - c.depth as i64, c.label + 1));
                    false
                }
            },
        };
        types.push(t);
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        return Err(Error::IncompleteBoundary(missing));
    }
    Ok(TypeField { n_pop: window.n_pop, types })
}

/// Debug CSV: `generation,label,parent_generation,parent_label,component,type`
/// with one-based labels and types `a`/`A`.
pub fn write_window_csv<W: Write>(
    window: &GenealogyWindow,
    labeling: &ComponentLabeling,
    types: &TypeField,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "generation,label,parent_generation,parent_label,component,type")?;
    let n = window.n_pop as usize;
    for v in 0..window.vertex_count() {
        let g = window.generation_of_row(v / n);
        let p = window.parent_ref(v);
        let pg = g as i128 - p.offset as i128;
        let t = if types.types[v] { "a" } else { "A" };
        writeln!(w, "{g},{},{pg},{},{},{t}", v % n + 1, p.label + 1, labeling.component[v])?;
    }
    Ok(())
}

fn require_transient<T: Scalar>(dist: &AgeDistribution<T>, what: &str) -> Result<()> {
    match dist.meeting_regime() {
        MeetingRegime::Transient => Ok(()),
        _ => Err(Error::Regime(format!("{what} requires sum q_n^2 convergent: alpha < 1/2"))),
    }
}

fn check_p_t<T: Scalar>(p: T) -> Result<()> {
    check_p(p.to_f64().unwrap_or(f64::NAN))
}

/// Covariance of the types of two distinct individuals `lag` generations
/// apart: `p(1-p)` when lines meet almost surely, otherwise `p(1-p)` times
/// the meeting probability from sums truncated at `horizon`.
pub fn exact_covariance<T: Scalar>(n_pop: u32, dist: &AgeDistribution<T>, lag: u64, p: T, horizon: u64) -> Result<T> {
    check_p_t(p)?;
    let pq = p * (T::one() - p);
    match dist.meeting_regime() {
        MeetingRegime::Certain => Ok(pq),
        MeetingRegime::Boundary => Err(Error::Regime(
            "covariance undecided at alpha = 1/2; requires alpha < 1/2 or alpha > 1/2".into(),
        )),
        MeetingRegime::Transient => {
            let seq = RenewalSequence::compute(dist, horizon.max(lag.saturating_mul(2)))?;
            exact_covariance_from_sequence(n_pop, dist, &seq, lag, p)
        }
    }
}

pub fn exact_covariance_from_sequence<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    seq: &RenewalSequence<T>,
    lag: u64,
    p: T,
) -> Result<T> {
    check_p_t(p)?;
    Ok(p * (T::one() - p) * meeting_probability_checked(n_pop, dist, seq, lag)?)
}

/// `var Y_N(i) = p(1-p)(1 + S)/(N + S)` with `S = sum_{n>=1} q_n^2`.
pub fn exact_variance<T: Scalar>(n_pop: u32, dist: &AgeDistribution<T>, p: T, horizon: u64) -> Result<T> {
    require_transient(dist, "variance formula")?;
    let seq = RenewalSequence::compute(dist, horizon)?;
    exact_variance_from_sequence(n_pop, dist, &seq, p)
}

pub fn exact_variance_from_sequence<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    seq: &RenewalSequence<T>,
    p: T,
) -> Result<T> {
    check_p_t(p)?;
    let cov0 = exact_covariance_from_sequence(n_pop, dist, seq, 0, p)?;
    let nf = lit::<T>(n_pop as f64);
    Ok((p * (T::one() - p) + (nf - T::one()) * cov0) / nf)
}

/// `corr(Y_N(0), Y_N(i)) = sum_n q_n q_{n+i} / sum_n q_n^2`, independent of
/// `N`.
pub fn limiting_correlation<T: Scalar>(dist: &AgeDistribution<T>, lag: u64, horizon: u64) -> Result<T> {
    require_transient(dist, "limiting correlation")?;
    let seq = RenewalSequence::compute(dist, horizon)?;
    Ok(limiting_correlation_from_sequence(&seq, lag))
}

pub fn limiting_correlation_from_sequence<T: Scalar>(seq: &RenewalSequence<T>, lag: u64) -> T {
    seq.cross_sum(lag).value / seq.sum_q_squared().value
}

/// Tauberian approximation of the limiting correlation for tail `n^-alpha`:
/// `(1-alpha)^2 i^(2 alpha - 1) / (Gamma(2-alpha)^2 Gamma(2 alpha) sum_n q_n^2)`,
/// optionally multiplied by `p(1-p)`.
pub fn asymptotic_correlation<T: Scalar>(alpha: T, lag: u64, horizon: u64, include_p_factor: bool, p: T) -> Result<T> {
    let dist = AgeDistribution::power_law(alpha)?;
    require_transient(&dist, "asymptotic correlation")?;
    let seq = RenewalSequence::compute(&dist, horizon)?;
    asymptotic_correlation_from_sequence(alpha, lag, &seq, include_p_factor, p)
}

pub fn asymptotic_correlation_from_sequence<T: Scalar>(
    alpha: T,
    lag: u64,
    seq: &RenewalSequence<T>,
    include_p_factor: bool,
    p: T,
) -> Result<T> {
    check_p_t(p)?;
    let base = tauberian_cross_sum_asymptote(alpha, lag)? / seq.sum_q_squared().value;
    Ok(if include_p_factor { base * p * (T::one() - p) } else { base })
}

/// Bound on the covariance the window misses for lines that first meet more
/// than `distance` generations below the measurement generation:
/// `p(1-p) sum_{n>distance} q_n^2 / N`, the tail estimated from regular
/// variation of `q`.
pub fn window_bias_bound<T: Scalar>(
    n_pop: u32,
    dist: &AgeDistribution<T>,
    seq: &RenewalSequence<T>,
    distance: u64,
    p: T,
) -> Result<T> {
    check_p_t(p)?;
    if distance == 0 || distance > seq.horizon() {
        return Err(Error::invalid("distance", format!("must lie in 1..={}", seq.horizon())));
    }
    let head = RenewalSequence::from_values(seq.values()[..=distance as usize].to_vec());
    Ok(p * (T::one() - p) * joint_renewal_tail(dist, &head)? / lit(n_pop as f64))
}

/// Generations between the measurement generation of
/// [`estimate_correlation_mc`] and the bottom of its window.
pub fn measurement_depth(depth: u64, burn_in: u64, max_lag: u64) -> u64 {
    depth + burn_in - (depth + max_lag) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagEstimate {
    pub lag: u64,
    /// Mean of `(Y(g0) - p)(Y(g0 + lag) - p)` over replicates.
    pub covariance: SummaryEstimate,
    /// `covariance / variance`.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub n_pop: u32,
    pub depth: u64,
    pub burn_in: u64,
    pub p: f64,
    pub replicates: u64,
    /// Generation `g0` of the first member of every pair.
    pub measurement_generation: i64,
    /// `Y(g0)` over replicates.
    pub mean_y: SummaryEstimate,
    /// Mean of `(Y(g0) - p)^2`.
    pub variance: SummaryEstimate,
    pub lags: Vec<LagEstimate>,
    /// Fraction of interior vertices whose line leaves the window; the
    /// connections the window cannot see are confined to these lines.
    pub exit_fraction: SummaryEstimate,
}

/// Monte-Carlo covariances of the frequency process. Replicate `r` builds one
/// window from stream `(seed, r)` and pairs `Y(g0)` with `Y(g0 + lag)`, where
/// `g0 = -(T + max lag) / 2`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_correlation_mc<T: Scalar>(
    n_pop: u32,
    depth: u64,
    burn_in: u64,
    dist: &AgeDistribution<T>,
    p: f64,
    lags: &[u64],
    reps: u64,
    seed: u64,
) -> Result<CorrelationEstimate> {
    check_p(p)?;
    if reps < 2 {
        return Err(Error::invalid("reps", "need at least 2 replicates"));
    }
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if max_lag >= depth {
        return Err(Error::invalid("lags", format!("largest lag {max_lag} must be below the window depth {depth}")));
    }
    // probe the budget once before spawning replicates
    let vertices = (depth + burn_in + 1).saturating_mul(n_pop as u64);
    if vertices.saturating_mul(BYTES_PER_VERTEX as u64) > WINDOW_MEMORY_BUDGET_BYTES as u64 || vertices >= u32::MAX as u64 {
        return Err(Error::Resource(format!("window of {vertices} vertices exceeds the memory budget")));
    }
    let g0 = measurement_depth(depth, burn_in, max_lag) as i64 - (depth + burn_in) as i64;
    let per_rep = replicates(seed, reps, |_, rng| {
        let window = build_genealogy(n_pop, depth, burn_in, dist, rng).expect("size checked");
        let labeling = label_components(&window);
        let types = assign_types(&labeling, n_pop, p, rng).expect("p checked");
        let series = compute_frequency_series(&window, &types);
        let y0 = series.at(g0).expect("g0 inside");
        let ys: Vec<f64> = lags.iter().map(|&l| series.at(g0 + l as i64).expect("lag inside")).collect();
        (y0, ys, labeling.exit_fraction)
    });
    let y0s: Vec<f64> = per_rep.iter().map(|r| r.0).collect();
    let sq: Vec<f64> = y0s.iter().map(|y| (y - p) * (y - p)).collect();
    let variance = SummaryEstimate::from_samples(&sq).expect("reps > 0");
    let lag_estimates = lags
        .iter()
        .enumerate()
        .map(|(j, &lag)| {
            let prods: Vec<f64> = per_rep.iter().map(|r| (r.0 - p) * (r.1[j] - p)).collect();
            let covariance = SummaryEstimate::from_samples(&prods).expect("reps > 0");
            let correlation = if variance.mean > 0.0 { covariance.mean / variance.mean } else { f64::NAN };
            LagEstimate { lag, covariance, correlation }
        })
        .collect();
    let exits: Vec<f64> = per_rep.iter().map(|r| r.2).collect();
    Ok(CorrelationEstimate {
        n_pop,
        depth,
        burn_in,
        p,
        replicates: reps,
        measurement_generation: g0,
        mean_y: SummaryEstimate::from_samples(&y0s).expect("reps > 0"),
        variance,
        lags: lag_estimates,
        exit_fraction: SummaryEstimate::from_samples(&exits).expect("reps > 0"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc::stream;
    use crate::stats::chi_square_gof;

    fn power(alpha: f64) -> AgeDistribution<f64> {
        AgeDistribution::power_law(alpha).unwrap()
    }

    fn typed(window: &GenealogyWindow, p: f64, rng: &mut crate::SimRng) -> (ComponentLabeling, TypeField) {
        let l = label_components(window);
        let t = assign_types(&l, window.n_pop(), p, rng).unwrap();
        (l, t)
    }

    #[test]
    fn dirac_parents_are_previous_generation() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let w = build_genealogy(5, 20, 3, &d, &mut stream(0, 0)).unwrap();
        assert_eq!(w.vertex_count(), 5 * 24);
        for v in 5..w.vertex_count() {
            match w.parent(v) {
                Parent::Vertex(u) => assert_eq!(u / 5, v / 5 - 1),
                Parent::External(_) => panic!("internal parent expected"),
            }
        }
        assert!((0..5).all(|v| matches!(w.parent(v), Parent::External(ExternalCoord { depth: 1, .. }))));
    }

    #[test]
    fn single_lineage_is_one_component() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let w = build_genealogy(1, 100, 0, &d, &mut stream(1, 0)).unwrap();
        let l = label_components(&w);
        assert_eq!(l.count, 1);
        assert_eq!(l.exit_fraction, 1.0);
    }

    #[test]
    fn offsets_follow_the_age_law() {
        let d = power(0.3);
        let w = build_genealogy(100, 10_000, 0, &d, &mut stream(2, 0)).unwrap();
        let cells = 200usize;
        let mut observed = vec![0u64; cells + 1];
        let mut labels = vec![0u64; 100];
        for v in 0..w.vertex_count() {
            let p = w.parent_ref(v);
            observed[(p.offset.min(cells as u64 + 1) - 1) as usize] += 1;
            labels[p.label as usize] += 1;
        }
        let mut probs = d.pmf_table(cells);
        probs.push(d.tail(cells as u64 + 1));
        let r = chi_square_gof(&observed, &probs).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
        let total = w.vertex_count() as f64;
        let expect = total / 100.0;
        let sd = (total * 0.01 * 0.99).sqrt();
        assert!(labels.iter().all(|&c| (c as f64 - expect).abs() <= 4.0 * sd));
    }

    #[test]
    fn window_budget() {
        let d = power(0.3);
        let r = build_genealogy_with_budget(1000, 1000, 1000, &d, 1 << 20, &mut stream(0, 0));
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    // Oracle: follow each pair of ancestral lines and compare their vertex sets.
    #[test]
    fn components_match_ancestral_line_intersection() {
        let d = power(0.6);
        let w = build_genealogy(4, 40, 0, &d, &mut stream(3, 0)).unwrap();
        let l = label_components(&w);
        let line = |mut v: usize| {
            let mut seen = vec![v as i64];
            loop {
                match w.parent(v) {
                    Parent::Vertex(u) => {
                        seen.push(u as i64);
                        v = u;
                    }
                    Parent::External(c) => {
                        seen.push(-((c.depth * 4 + c.label as u64) as i64) - 1);
                        return seen;
                    }
                }
            }
        };
        let top = w.rows() - 1;
        for a in 0..4u32 {
            for b in 0..4u32 {
                let (va, vb) = (w.vertex(top, a), w.vertex(top, b));
                let la = line(va);
                let lb = line(vb);
                let meet = la.iter().any(|x| lb.contains(x));
                assert_eq!(meet, l.component[va] == l.component[vb]);
            }
        }
    }

    #[test]
    fn heavy_tails_give_many_components() {
        let d = power(0.3);
        let mut counts: Vec<u32> =
            (0..100).map(|r| label_components(&build_genealogy(10, 10_000, 0, &d, &mut stream(4, r)).unwrap()).count).collect();
        counts.sort_unstable();
        assert!(counts[50] > 5, "{counts:?}");
    }

    #[test]
    fn dirac_forest_has_few_components() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let w = build_genealogy(10, 2000, 0, &d, &mut stream(5, 0)).unwrap();
        // only lines reaching the bottom rows can stay apart
        assert!(label_components(&w).count <= 10);
    }

    #[test]
    fn extreme_p_and_types_constant_on_components() {
        let d = power(0.3);
        let mut rng = stream(6, 0);
        let w = build_genealogy(20, 500, 100, &d, &mut rng).unwrap();
        let l = label_components(&w);
        for p in [0.0, 1.0] {
            let t = assign_types(&l, 20, p, &mut rng).unwrap();
            assert!(t.types.iter().all(|&a| a == (p == 1.0)));
            let y = compute_frequency_series(&w, &t);
            assert_eq!(y.y.len(), 501);
            assert!(y.y.iter().all(|&v| v == p));
        }
        let (_, t) = typed(&w, 0.4, &mut rng);
        assert_eq!(type_violations(&w, &t), 0);
        assert!(assign_types(&l, 20, 1.3, &mut rng).is_err());
        assert!(assign_types(&l, 20, -0.1, &mut rng).is_err());
    }

    #[test]
    fn single_component_series_is_constant() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let mut rng = stream(7, 0);
        let w = build_genealogy(1, 50, 0, &d, &mut rng).unwrap();
        let (_, t) = typed(&w, 0.5, &mut rng);
        let y = compute_frequency_series(&w, &t);
        assert!(y.y.iter().all(|&v| v == y.y[0] && (v == 0.0 || v == 1.0)));
    }

    #[test]
    fn marginal_type_frequency_is_p() {
        let d = power(0.3);
        let ys: Vec<f64> = replicates(8, 1000, |_, rng| {
            let w = build_genealogy(10, 100, 100, &d, rng).unwrap();
            let (_, t) = typed(&w, 0.3, rng);
            let s = compute_frequency_series(&w, &t);
            s.y.iter().sum::<f64>() / s.y.len() as f64
        });
        let e = SummaryEstimate::from_samples(&ys).unwrap();
        assert!(e.within(0.3, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn variance_and_lag_one_covariance_match_formulas() {
        let d = power(0.3);
        let (n_pop, p) = (20u32, 0.5);
        let seq = RenewalSequence::compute(&d, 100_000).unwrap();
        let var = exact_variance_from_sequence(n_pop, &d, &seq, p).unwrap();
        let cov1 = exact_covariance_from_sequence(n_pop, &d, &seq, 1, p).unwrap();
        let est = estimate_correlation_mc(n_pop, 400, 2000, &d, p, &[1], 4000, 9).unwrap();
        assert!(est.variance.within(var, 3.0, 0.0), "{:?} {var}", est.variance);
        assert!(est.lags[0].covariance.within(cov1, 3.0, 0.0), "{:?} {cov1}", est.lags[0]);
        // the displayed variance form is off by far more than the noise
        let s = seq.sum_q_squared().value - 1.0;
        let displayed = p * (1.0 - p) * (s + 2.0 - 1.0 / n_pop as f64) / (n_pop as f64 + s);
        assert!(!est.variance.within(displayed, 5.0, 0.0));
    }

    #[test]
    fn dirac_correlation_is_one() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let est = estimate_correlation_mc(20, 2000, 500, &d, 0.5, &[1, 10, 100], 200, 10).unwrap();
        for l in &est.lags {
            assert!(l.correlation > 0.95, "{l:?}");
        }
        let zero = estimate_correlation_mc(20, 200, 0, &d, 0.0, &[1, 10], 20, 10).unwrap();
        assert!(zero.lags.iter().all(|l| l.covariance.mean == 0.0));
        assert!(estimate_correlation_mc(20, 10, 0, &d, 0.5, &[10], 20, 10).is_err());
    }

    #[test]
    fn bias_bound_is_small_and_decreasing() {
        let d = power(0.3);
        let seq = RenewalSequence::compute(&d, 100_000).unwrap();
        let near = window_bias_bound(50, &d, &seq, 1000, 0.5).unwrap();
        let far = window_bias_bound(50, &d, &seq, 15_000, 0.5).unwrap();
        assert!(far < near && far > 0.0 && far < 1e-4, "{near} {far}");
        assert_eq!(measurement_depth(10_000, 10_000, 100), 14_950);
        assert!(window_bias_bound(50, &d, &seq, 0, 0.5).is_err());
    }

    #[test]
    fn covariance_regimes() {
        assert_eq!(exact_covariance(10, &power(0.7), 3, 0.5, 100).unwrap(), 0.25);
        assert_eq!(exact_covariance(10, &power(0.3), 3, 0.0, 100_000).unwrap(), 0.0);
        assert_eq!(exact_covariance(10, &power(0.3), 3, 1.0, 100_000).unwrap(), 0.0);
        assert!(matches!(exact_covariance(10, &power(0.5), 3, 0.5, 100), Err(Error::Regime(_))));
        assert!(matches!(exact_variance(10, &power(0.7), 0.5, 100), Err(Error::Regime(_))));
        let c = exact_covariance(50, &power(0.3), 10, 0.5, 1_000_000).unwrap();
        assert!(c > 0.0 && c < 0.25);
    }

    #[test]
    fn covariance_decays_like_inverse_population() {
        let d = power(0.3);
        let seq = RenewalSequence::compute(&d, 100_000).unwrap();
        let c: Vec<f64> = [10u32, 100, 1000]
            .iter()
            .map(|&n| exact_covariance_from_sequence(n, &d, &seq, 5, 0.5).unwrap())
            .collect();
        assert!(c[0] > c[1] && c[1] > c[2]);
        assert!((c[1] / c[2] - 10.0).abs() < 1.0 && (c[0] / c[1] - 10.0).abs() < 2.0);
    }

    #[test]
    fn variance_with_one_individual() {
        let d = power(0.3);
        let seq = RenewalSequence::compute(&d, 10_000).unwrap();
        assert!((exact_variance_from_sequence(1, &d, &seq, 0.3).unwrap() - 0.21).abs() < 1e-12);
        let v = exact_variance_from_sequence(50, &d, &seq, 0.5).unwrap();
        assert!(v > 0.0 && v < 0.25 / 10.0);
    }

    #[test]
    fn correlation_properties() {
        let d = power(0.3);
        let seq = RenewalSequence::compute(&d, 200_000).unwrap();
        assert!((limiting_correlation_from_sequence(&seq, 0) - 1.0).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 1..=1000 {
            let c = limiting_correlation_from_sequence(&seq, i);
            assert!(c > 0.0 && c < prev, "{i} {c}");
            prev = c;
        }
        let plain = asymptotic_correlation_from_sequence(0.3, 100, &seq, false, 0.5).unwrap();
        let scaled = asymptotic_correlation_from_sequence(0.3, 100, &seq, true, 0.5).unwrap();
        assert!((scaled - 0.25 * plain).abs() < 1e-15);
        assert!(matches!(limiting_correlation(&power(0.6), 3, 100), Err(Error::Regime(_))));
        assert!(asymptotic_correlation(0.6, 3, 100, false, 0.5).is_err());
    }

    #[test]
    fn conditional_propagation() {
        let d = power(0.3);
        let mut rng = stream(11, 0);
        let w = build_genealogy(6, 60, 20, &d, &mut rng).unwrap();
        let all_a = BoundaryTypes {
            boundary_row: 20,
            vertices: vec![true; 21 * 6],
            external: label_components(&w).external.keys().map(|&c| (c, true)).collect(),
        };
        let t = propagate_types_conditional(&w, &all_a).unwrap();
        assert!(t.types.iter().all(|&a| a));
        let mut partial = all_a.clone();
        partial.external.clear();
        match propagate_types_conditional(&w, &partial) {
            Err(Error::IncompleteBoundary(missing)) => assert!(!missing.is_empty()),
            other => panic!("{other:?}"),
        }
        let b = sample_boundary_types(&w, 20, 0.5, &mut rng).unwrap();
        let t = propagate_types_conditional(&w, &b).unwrap();
        assert_eq!(type_violations(&w, &t), 0);
    }

    #[test]
    fn dirac_single_lineage_takes_boundary_type() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let w = build_genealogy(1, 10, 5, &d, &mut stream(12, 0)).unwrap();
        for ty in [false, true] {
            let mut b = sample_boundary_types(&w, 5, 0.5, &mut stream(12, 1)).unwrap();
            b.vertices.iter_mut().for_each(|x| *x = ty);
            b.external.values_mut().for_each(|x| *x = ty);
            let t = propagate_types_conditional(&w, &b).unwrap();
            assert!(t.types.iter().all(|&x| x == ty));
        }
    }

    #[test]
    fn conditional_law_matches_direct_assignment() {
        let d = power(0.3);
        let p = 0.3;
        let pairs: Vec<(f64, f64)> = replicates(13, 1000, |_, rng| {
            let w = build_genealogy(20, 300, 0, &d, rng).unwrap();
            let (_, direct) = typed(&w, p, rng);
            let b = sample_boundary_types(&w, 100, p, rng).unwrap();
            let cond = propagate_types_conditional(&w, &b).unwrap();
            let mean = |t: &TypeField| compute_frequency_series(&w, t).y.iter().sum::<f64>() / 301.0;
            (mean(&direct), mean(&cond))
        });
        let a = SummaryEstimate::from_samples(&pairs.iter().map(|x| x.0).collect::<Vec<_>>()).unwrap();
        let b = SummaryEstimate::from_samples(&pairs.iter().map(|x| x.1).collect::<Vec<_>>()).unwrap();
        assert!(a.within(p, 3.0, 0.0) && b.within(p, 3.0, 0.0), "{a:?} {b:?}");
    }

    #[test]
    fn csv_outputs() {
        let d = AgeDistribution::<f64>::dirac(1).unwrap();
        let mut rng = stream(14, 0);
        let w = build_genealogy(2, 2, 0, &d, &mut rng).unwrap();
        let (l, t) = typed(&w, 1.0, &mut rng);
        let mut buf = Vec::new();
        write_window_csv(&w, &l, &t, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 7);
        assert!(s.lines().nth(1).unwrap().starts_with("-2,1,-3,"));
        let mut buf = Vec::new();
        compute_frequency_series(&w, &t).write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().nth(1).unwrap(), "-2,1.0000000000000000e0");
    }
}
