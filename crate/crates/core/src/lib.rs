//! Simulation and exact computation for the Wright-Fisher model with a seed
//! bank, where the parent of an individual lived a random number of
//! generations in the past drawn from an age distribution `mu`.
//!
//! The crate is organised around the objects of the model:
//!
//! * [`distributions`]: the age law, including the power-law family with
//!   tail `n^-alpha`.
//! * [`renewal`]: the renewal sequence `q_n` of a single ancestral line and
//!   the sums built from it.
//! * [`ancestry`]: coalescing ancestral lines backwards in time.
//! * [`urn`]: the urn chain of renewing lineages and its sectioned variant.
//! * [`forward`]: the forward-in-time genealogy forest, types and the
//!   frequency process.
//! * [`stats`]: estimators and goodness-of-fit tests.
//! * [`mc`]: seeded, thread-count independent replicate execution.
//!
//! Exact numerical routines are generic over the floating point type
//! ([`Scalar`]); the urn stationarity check additionally runs over exact
//! rationals ([`Rational`]).

pub mod ancestry;
pub mod distributions;
pub mod error;
pub mod forward;
pub mod mc;
pub mod renewal;
pub mod special;
pub mod stats;
pub mod urn;

mod dsu;
mod series;

use std::fmt::Display;
use std::iter::Sum;

use num_traits::{Float, FloatConst};
use rustfft::FftNum;

pub use error::{Error, Result};

/// Floating point type usable by the exact numerical routines.
pub trait Scalar: Float + FloatConst + FftNum + Sum + Display + Default {}

impl<T> Scalar for T where T: Float + FloatConst + FftNum + Sum + Display + Default {}

/// Converts an `f64` literal into `T`.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Exact rational arithmetic for the stationarity check.
pub type Rational = num_rational::Ratio<i128>;

pub type AgeDistributionF64 = distributions::AgeDistribution<f64>;
pub type AgeDistributionF32 = distributions::AgeDistribution<f32>;
pub type RenewalSequenceF64 = renewal::RenewalSequence<f64>;
pub type RenewalSequenceF32 = renewal::RenewalSequence<f32>;

pub use ancestry::{CensoredOutcome, PartitionTrajectory};
pub use distributions::{AgeDistribution, DistributionSpec, Mean, MeetingRegime};
pub use forward::{ComponentLabeling, FrequencySeries, GenealogyWindow, TypeField};
pub use mc::SimRng;
pub use renewal::RenewalSequence;
pub use stats::SummaryEstimate;
pub use urn::{SectionedUrnState, UrnState};
