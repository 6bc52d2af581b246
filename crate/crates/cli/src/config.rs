//! Experiment configuration files.

use std::path::{Path, PathBuf};

use seedbank::DistributionSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// JSON experiment configuration. Every field is optional at parse time;
/// each subcommand checks for the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    /// Truncate the distribution to `{1..=truncate}` before use.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate: Option<u64>,
    /// Population size `N`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub population: Option<u32>,
    /// Sample size `n`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    /// Window depth `T`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u64>,
    /// Burn-in margin `B`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<u64>>,
    /// Scaled times `t` for survival curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Field names, in the order reported by `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Distribution,
    Population,
    SampleSize,
    Horizon,
    Depth,
    BurnIn,
    P,
    Lags,
    Times,
    Replicates,
    Seed,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Distribution => "distribution",
            Field::Population => "population",
            Field::SampleSize => "sample_size",
            Field::Horizon => "horizon",
            Field::Depth => "depth",
            Field::BurnIn => "burn_in",
            Field::P => "p",
            Field::Lags => "lags",
            Field::Times => "times",
            Field::Replicates => "replicates",
            Field::Seed => "seed",
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("malformed config: {e}")))
    }

    pub fn is_set(&self, field: Field) -> bool {
        match field {
            Field::Distribution => self.distribution.is_some(),
            Field::Population => self.population.is_some(),
            Field::SampleSize => self.sample_size.is_some(),
            Field::Horizon => self.horizon.is_some(),
            Field::Depth => self.depth.is_some(),
            Field::BurnIn => self.burn_in.is_some(),
            Field::P => self.p.is_some(),
            Field::Lags => self.lags.is_some(),
            Field::Times => self.times.is_some(),
            Field::Replicates => self.replicates.is_some(),
            Field::Seed => self.seed.is_some(),
        }
    }

    pub fn missing(&self, required: &[Field]) -> Vec<&'static str> {
        required.iter().filter(|&&f| !self.is_set(f)).map(|f| f.name()).collect()
    }

    /// Value checks independent of the subcommand.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("population", self.population.map(u64::from)),
            ("sample_size", self.sample_size.map(u64::from)),
            ("horizon", self.horizon),
            ("depth", self.depth),
            ("replicates", self.replicates),
            ("truncate", self.truncate),
        ];
        for (name, v) in positive {
            if v == Some(0) {
                out.push(format!("{name}: must be positive"));
            }
        }
        if let Some(p) = self.p {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("p: must lie in [0, 1], got {p}"));
            }
        }
        if let Some(times) = &self.times {
            if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                out.push("times: must be a non-empty list of finite nonnegative numbers".into());
            }
        }
        if let Some(lags) = &self.lags {
            if lags.is_empty() {
                out.push("lags: must be non-empty".into());
            }
        }
        if let (Some(n), Some(pop)) = (self.sample_size, self.population) {
            if n > pop {
                out.push(format!("sample_size: {n} exceeds population {pop}"));
            }
        }
        if let Some(spec) = &self.distribution {
            if let Err(e) = spec.build::<f64>() {
                out.push(format!("distribution: {e}"));
            }
        }
        out
    }

    /// Regime hypotheses that are likely to be violated or borderline.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(DistributionSpec::PowerLaw { alpha }) = self.distribution {
            if (alpha - 0.5).abs() < 0.02 {
                out.push(format!(
                    "alpha = {alpha} is at or near the boundary 1/2: whether two lines meet depends on the slowly varying part of the tail; no regime is asserted"
                ));
            }
            if (alpha - 1.0).abs() < 0.02 {
                out.push(format!(
                    "alpha = {alpha} is at or near the boundary 1: finiteness of the expected coalescence time depends on the slowly varying part of the tail"
                ));
            }
        }
        if let Some(pop) = self.population {
            if pop < 100 {
                out.push(format!("population {pop} < 100: coalescent limits may be inaccurate"));
            }
        }
        out
    }

    /// Required fields present and all values valid. Value violations are
    /// listed before missing fields.
    pub fn check(&self, required: &[Field]) -> Result<(), CliError> {
        let mut problems = self.violations();
        let missing = self.missing(required);
        if !missing.is_empty() {
            problems.push(format!("missing fields: {}", missing.join(", ")));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems.join("; ")))
        }
    }
}
