//! Subcommand implementations.

use seedbank::ancestry::{
    meeting_horizon_bias, meeting_probability_checked, meeting_probability_from_sequence, run_pair_tmrca,
    simulate_ancestral_partition, summarize_pairs, pairwise_no_coalescence_curve, CensoredOutcome, PairSummary,
};
use seedbank::distributions::{AgeDistribution, AgeKind, MeetingRegime};
use seedbank::forward::{
    assign_types, asymptotic_correlation_from_sequence, build_genealogy, compute_frequency_series,
    estimate_correlation_mc, exact_covariance_from_sequence, exact_variance_from_sequence, label_components,
    limiting_correlation_from_sequence, measurement_depth, window_bias_bound,
};
use seedbank::mc::{derive_seed, replicates, stream};
use seedbank::renewal::{
    cross_sum_leading_term, tauberian_cross_sum_asymptote, tauberian_partial_sum_asymptote, SumDiagnostic,
};
use seedbank::stats::{chi_square_gof, ks_statistic, KsResult, SummaryEstimate};
use seedbank::urn::{
    run_sectioned, sample_stationary, single_merger_probability_leading, stationary_merger_rate,
    verify_stationarity_exact, write_trajectory_csv, SectionedUrnState,
};
use seedbank::{Error, RenewalSequence};
use serde::Serialize;

use crate::config::{ExperimentConfig, Field};
use crate::output::{num, Output};
use crate::CliError;

/// Largest horizon for which `tmrca` evaluates the truncated meeting formula.
const FORMULA_HORIZON_LIMIT: u64 = 10_000_000;

pub const RENEWAL_FIELDS: &[Field] = &[Field::Distribution, Field::Horizon];
pub const TMRCA_FIELDS: &[Field] = &[Field::Distribution, Field::Population, Field::Horizon, Field::Replicates, Field::Seed];
pub const SURVIVAL_FIELDS: &[Field] = &[Field::Distribution, Field::Population, Field::Times, Field::Replicates, Field::Seed];
pub const STATIONARITY_FIELDS: &[Field] = &[Field::Distribution, Field::SampleSize];
pub const MERGER_FIELDS: &[Field] =
    &[Field::Distribution, Field::Population, Field::SampleSize, Field::Replicates, Field::Seed];
pub const FORWARD_FIELDS: &[Field] = &[
    Field::Distribution,
    Field::Population,
    Field::Depth,
    Field::BurnIn,
    Field::P,
    Field::Lags,
    Field::Replicates,
    Field::Seed,
    Field::Horizon,
];
pub const TAUBERIAN_FIELDS: &[Field] = &[Field::Distribution, Field::Horizon, Field::Lags];

fn distribution(cfg: &ExperimentConfig) -> Result<AgeDistribution<f64>, CliError> {
    let spec = cfg.distribution.as_ref().ok_or_else(|| CliError::Config("missing fields: distribution".into()))?;
    let dist = spec.build::<f64>()?;
    Ok(match cfg.truncate {
        Some(j) => dist.truncate(j)?,
        None => dist,
    })
}

fn diagnostic(d: SumDiagnostic<f64>) -> serde_json::Value {
    serde_json::json!({ "value": d.value, "last_decade_increment": d.last_decade_increment,
        "relative_increment": d.last_decade_increment / d.value })
}

pub fn renewal_seq(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(RENEWAL_FIELDS)?;
    let dist = distribution(cfg)?;
    let horizon = cfg.horizon.expect("checked");
    let seq = RenewalSequence::compute(&dist, horizon)?;
    out.csv("renewal.csv", |w| seq.write_csv(w))?;
    let summary = serde_json::json!({
        "horizon": horizon,
        "q_horizon": seq.values()[horizon as usize],
        "partial_sum": seq.partial_sum(horizon),
        "sum_q_squared": diagnostic(seq.sum_q_squared()),
        "inverse_mean": dist.beta(),
    });
    out.json("renewal.json", &summary)
}

#[derive(Serialize)]
struct TmrcaResults {
    sample_size: u32,
    summary: PairSummary,
    /// Conditional mean of `tau / N`.
    mean_tau_over_n: Option<f64>,
    /// `N E[eta]^2`, the expected pair coalescence time for finite mean.
    expected_pair_tau: Option<f64>,
    /// Meeting probability of two distinct lines from sums truncated at the
    /// horizon, with the bound on the horizon bias (alpha < 1/2 only).
    meeting_probability: Option<f64>,
    horizon_bias: Option<f64>,
    /// Truncated-sum formula evaluated without the convergence check.
    truncated_meeting_probability: Option<f64>,
}

pub fn tmrca(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(TMRCA_FIELDS)?;
    let dist = distribution(cfg)?;
    let n_pop = cfg.population.expect("checked");
    let horizon = cfg.horizon.expect("checked");
    let reps = cfg.replicates.expect("checked");
    let seed = cfg.seed.expect("checked");
    let n = cfg.sample_size.unwrap_or(2);
    let outcomes: Vec<CensoredOutcome> = if n == 2 {
        run_pair_tmrca(n_pop, &dist, horizon, reps, seed)?
    } else {
        if n < 2 || n > n_pop {
            return Err(CliError::Config(format!("sample_size: must satisfy 2 <= n <= population, got {n}")));
        }
        replicates(seed, reps, |_, rng| {
            let t = simulate_ancestral_partition(n_pop, n, &dist, horizon, rng).expect("parameters checked");
            match t.tmrca() {
                Some(tau) => CensoredOutcome::Merged { tau },
                None => CensoredOutcome::Censored { horizon },
            }
        })
    };
    out.csv("tmrca.csv", |w| {
        writeln!(w, "replicate,outcome,tau_or_horizon")?;
        for (i, o) in outcomes.iter().enumerate() {
            let kind = if o.tau().is_some() { "merged" } else { "censored" };
            writeln!(w, "{i},{kind},{}", o.tau_or_horizon())?;
        }
        Ok(())
    })?;
    let summary = summarize_pairs(&outcomes, horizon)?;
    let mean_tau_over_n = summary.conditional_mean_tau.map(|m| m.mean / n_pop as f64);
    let expected_pair_tau = dist.mean().finite().filter(|_| n == 2).map(|m| n_pop as f64 * m * m);
    let mut meeting_probability = None;
    let mut horizon_bias = None;
    let mut truncated_meeting_probability = None;
    let heavy = matches!(dist.kind(), AgeKind::PowerLaw { alpha } if *alpha < 1.0);
    if n == 2 && heavy && horizon <= FORMULA_HORIZON_LIMIT {
        let seq = RenewalSequence::compute(&dist, horizon)?;
        truncated_meeting_probability = Some(meeting_probability_from_sequence(n_pop, &seq, 0));
        if dist.meeting_regime() == MeetingRegime::Transient {
            meeting_probability = Some(meeting_probability_checked(n_pop, &dist, &seq, 0)?);
            horizon_bias = Some(meeting_horizon_bias(n_pop, &dist, &seq)?);
        }
    }
    out.json(
        "tmrca.json",
        &TmrcaResults {
            sample_size: n,
            summary,
            mean_tau_over_n,
            expected_pair_tau,
            meeting_probability,
            horizon_bias,
            truncated_meeting_probability,
        },
    )
}

pub fn kingman_survival(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(SURVIVAL_FIELDS)?;
    let dist = distribution(cfg)?;
    let n_pop = cfg.population.expect("checked");
    let times = cfg.times.as_ref().expect("checked");
    let curve =
        pairwise_no_coalescence_curve(n_pop, &dist, times, cfg.replicates.expect("checked"), cfg.seed.expect("checked"))?;
    let rate = curve.beta * curve.beta;
    let mut sorted = curve.scaled_times.clone();
    sorted.sort_by(f64::total_cmp);
    let ks: Option<KsResult> = ks_statistic(&sorted, |x| 1.0 - (-rate * x).exp()).ok();
    out.csv("survival.csv", |w| {
        writeln!(w, "t,estimate,stderr,lower,upper,kingman")?;
        for p in &curve.points {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                num(p.t),
                num(p.estimate.mean),
                num(p.estimate.stderr),
                num(p.interval.lower),
                num(p.interval.upper),
                num(p.kingman)
            )?;
        }
        Ok(())
    })?;
    out.json("survival.json", &serde_json::json!({ "curve": curve, "ks_exponential": ks }))
}

pub fn urn_stationarity(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(STATIONARITY_FIELDS)?;
    let dist = distribution(cfg)?;
    if dist.beta().is_none() {
        return Err(Error::Regime("stationary urn law requires a finite-mean age distribution (E[eta] < inf)".into()).into());
    }
    let n = cfg.sample_size.expect("checked");
    let check = verify_stationarity_exact(n, &dist)?;
    // first-urn count after a few steps from the stationary law is Binomial(n, beta_1)
    let first_urn = match (cfg.replicates, cfg.seed) {
        (Some(reps), Some(seed)) => {
            let counts = replicates(seed, reps, |_, rng| {
                let mut s = sample_stationary(n, &dist, rng).expect("finite mean");
                for _ in 0..4 {
                    s.step(&dist, rng);
                }
                s.first_urn()
            });
            let mut observed = vec![0u64; n as usize + 1];
            for c in counts {
                observed[c as usize] += 1;
            }
            let b = dist.beta().expect("finite mean");
            let mut probs = Vec::with_capacity(n as usize + 1);
            let mut binom = 1.0;
            for k in 0..=n {
                probs.push(binom * b.powi(k as i32) * (1.0 - b).powi((n - k) as i32));
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
            Some(serde_json::json!({ "observed": observed, "expected": probs, "chi_square": chi_square_gof(&observed, &probs).ok() }))
        }
        _ => None,
    };
    out.json(
        "stationarity.json",
        &serde_json::json!({ "sample_size": n, "exact": check, "beta_1": dist.beta(), "first_urn": first_urn }),
    )
}

pub fn merger_rate(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(MERGER_FIELDS)?;
    let dist = distribution(cfg)?;
    let n_pop = cfg.population.expect("checked");
    let n = cfg.sample_size.expect("checked");
    let reps = cfg.replicates.expect("checked");
    let seed = cfg.seed.expect("checked");
    let rate = stationary_merger_rate(n, &dist, n_pop)?;
    let draws = replicates(seed, reps, |_, rng| {
        let s = sample_stationary(n, &dist, rng).expect("finite mean");
        single_merger_probability_leading(&s, &dist, n_pop)
    });
    let estimate = SummaryEstimate::from_samples(&draws).expect("replicates >= 1");
    if let Some(steps) = cfg.horizon {
        let mut rng = stream(derive_seed(seed, 1), 0);
        let start = sample_stationary(n, &dist, &mut rng)?;
        let state = SectionedUrnState::from_urn_state(&start, n_pop)?;
        let rows = run_sectioned(state, &dist, steps, &mut rng);
        out.csv("trajectory.csv", |w| write_trajectory_csv(&rows, w))?;
    }
    let z = if estimate.stderr > 0.0 { (estimate.mean - rate) / estimate.stderr } else { 0.0 };
    out.json(
        "merger_rate.json",
        &serde_json::json!({ "stationary_rate": rate, "leading_term_average": estimate, "z_score": z }),
    )
}

#[derive(Serialize)]
struct LagRow {
    lag: u64,
    covariance: f64,
    covariance_stderr: f64,
    correlation: f64,
    exact_covariance: Option<f64>,
    limiting_correlation: Option<f64>,
    asymptotic_correlation: Option<f64>,
    asymptotic_correlation_with_p_factor: Option<f64>,
    leading_term_correlation: Option<f64>,
}

pub fn forward_corr(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(FORWARD_FIELDS)?;
    let dist = distribution(cfg)?;
    let n_pop = cfg.population.expect("checked");
    let depth = cfg.depth.expect("checked");
    let burn_in = cfg.burn_in.expect("checked");
    let p = cfg.p.expect("checked");
    let lags = cfg.lags.as_ref().expect("checked");
    let seed = cfg.seed.expect("checked");
    let horizon = cfg.horizon.expect("checked");
    let regime = dist.meeting_regime();
    let seq = match regime {
        MeetingRegime::Transient => Some(RenewalSequence::compute(&dist, horizon)?),
        _ => None,
    };
    let est = estimate_correlation_mc(n_pop, depth, burn_in, &dist, p, lags, cfg.replicates.expect("checked"), seed)?;
    let alpha = match dist.kind() {
        AgeKind::PowerLaw { alpha } => Some(*alpha),
        _ => None,
    };
    let mut rows = Vec::new();
    for l in &est.lags {
        let (exact, limiting, asym, asym_p, leading) = match &seq {
            Some(seq) => {
                let a = alpha.expect("transient implies power law");
                let sq = seq.sum_q_squared().value;
                (
                    Some(exact_covariance_from_sequence(n_pop, &dist, seq, l.lag, p)?),
                    Some(limiting_correlation_from_sequence(seq, l.lag)),
                    asymptotic_correlation_from_sequence(a, l.lag, seq, false, p).ok(),
                    asymptotic_correlation_from_sequence(a, l.lag, seq, true, p).ok(),
                    cross_sum_leading_term(a, l.lag).ok().map(|c| c / sq),
                )
            }
            None if regime == MeetingRegime::Certain => (Some(p * (1.0 - p)), Some(1.0), None, None, None),
            None => (None, None, None, None, None),
        };
        rows.push(LagRow {
            lag: l.lag,
            covariance: l.covariance.mean,
            covariance_stderr: l.covariance.stderr,
            correlation: l.correlation,
            exact_covariance: exact,
            limiting_correlation: limiting,
            asymptotic_correlation: asym,
            asymptotic_correlation_with_p_factor: asym_p,
            leading_term_correlation: leading,
        });
    }
    let exact_variance = match &seq {
        Some(seq) => Some(exact_variance_from_sequence(n_pop, &dist, seq, p)?),
        None => None,
    };
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    let truncation_bias_bound = seq
        .as_ref()
        .and_then(|seq| window_bias_bound(n_pop, &dist, seq, measurement_depth(depth, burn_in, max_lag), p).ok());
    // one window's frequency series from a separate stream
    let mut rng = stream(derive_seed(seed, 1), 0);
    let window = build_genealogy(n_pop, depth, burn_in, &dist, &mut rng)?;
    let types = assign_types(&label_components(&window), n_pop, p, &mut rng)?;
    let series = compute_frequency_series(&window, &types);
    out.csv("frequency.csv", |w| {
        writeln!(w, "generation,y")?;
        for (g, y) in series.generations.iter().zip(&series.y) {
            writeln!(w, "{g},{}", num(*y))?;
        }
        Ok(())
    })?;
    out.json(
        "correlation.json",
        &serde_json::json!({
            "estimate": est,
            "exact_variance": exact_variance,
            "truncation_bias_bound": truncation_bias_bound,
            "lags": rows,
            "bias_disclosure": "lines that leave the window are joined only through shared out-of-window coordinates; truncation_bias_bound bounds the covariance missed below the window",
        }),
    )
}

pub fn tauberian(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    cfg.check(TAUBERIAN_FIELDS)?;
    let dist = distribution(cfg)?;
    let alpha = match dist.kind() {
        AgeKind::PowerLaw { alpha } if *alpha > 0.0 && *alpha < 1.0 => *alpha,
        _ => {
            return Err(Error::Regime("Tauberian asymptotics require a power-law tail with 0 < alpha < 1".into()).into())
        }
    };
    let horizon = cfg.horizon.expect("checked");
    let lags = cfg.lags.as_ref().expect("checked");
    if let Some(&bad) = lags.iter().find(|&&i| i == 0 || i > horizon) {
        return Err(CliError::Config(format!("lags: index {bad} must lie in 1..=horizon")));
    }
    let seq = RenewalSequence::compute(&dist, horizon)?;
    let transient = alpha < 0.5;
    out.csv("tauberian.csv", |w| {
        writeln!(
            w,
            "i,partial_sum,partial_asymptote,partial_ratio,cross_sum,cross_asymptote,cross_ratio,cross_leading_term,cross_leading_ratio"
        )?;
        for &i in lags {
            let s = seq.partial_sum(i);
            let a = tauberian_partial_sum_asymptote(alpha, i).expect("alpha checked");
            write!(w, "{i},{},{},{}", num(s), num(a), num(s / a))?;
            if transient {
                let c = seq.cross_sum(i).value;
                let ca = tauberian_cross_sum_asymptote(alpha, i).expect("alpha checked");
                let cl = cross_sum_leading_term(alpha, i).expect("alpha checked");
                writeln!(w, ",{},{},{},{},{}", num(c), num(ca), num(c / ca), num(cl), num(c / cl))?;
            } else {
                writeln!(w, ",,,,,")?;
            }
        }
        Ok(())
    })?;
    out.json(
        "tauberian.json",
        &serde_json::json!({ "alpha": alpha, "horizon": horizon, "sum_q_squared": diagnostic(seq.sum_q_squared()) }),
    )
}

pub fn required_fields(command: &str) -> Option<&'static [Field]> {
    Some(match command {
        "renewal-seq" => RENEWAL_FIELDS,
        "tmrca" => TMRCA_FIELDS,
        "kingman-survival" => SURVIVAL_FIELDS,
        "urn-stationarity" => STATIONARITY_FIELDS,
        "merger-rate" => MERGER_FIELDS,
        "forward-corr" => FORWARD_FIELDS,
        "tauberian" => TAUBERIAN_FIELDS,
        _ => return None,
    })
}
