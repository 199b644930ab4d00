//! Statistical kernels: location and effect-size tests, variance-homogeneity
//! tests, rank tests, bootstrap intervals and multiple-comparison control.
//!
//! Every kernel is a pure function over slices of a [`Scalar`](crate::Scalar).
//! Variances use the n−1 denominator unless a function says otherwise.
//! All p values are two-sided.

mod bootstrap;
mod correction;
pub(crate) mod dist;
mod location;
mod rank;
pub mod rng;
mod summary;
mod variance;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap_ci, percentile, BootstrapCi, BootstrapConfig};
pub use correction::bonferroni;
pub use location::{cohens_d, cohens_d_summary, welch_t, welch_t_summary};
pub use rank::{kruskal_wallis, mann_whitney_u, rank_average, EXACT_MWU_MAX_TOTAL};
pub use rng::SeedStream;
pub use summary::{mean, median, population_variance, variance, SampleSummary};
pub use variance::{brown_forsythe, levene_mean};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("{what}: need at least {need} observations, got {got}")]
    TooFewObservations {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("{what}: need at least {need} groups, got {got}")]
    TooFewGroups {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("{0}: pooled standard deviation is zero")]
    ZeroSpread(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bootstrap statistic undefined on {redraws} consecutive redraws of resample {resample}")]
    BootstrapExhausted { resample: usize, redraws: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    WelchT,
    BrownForsythe,
    LeveneMean,
    KruskalWallis,
    MannWhitney,
    MannWhitneyExact,
}

/// Outcome of a hypothesis test.
///
/// `df` is the (numerator) degrees of freedom where the reference distribution
/// has one; F tests also fill `df2`. `degenerate` marks conventional values
/// returned for zero-spread input instead of a computed statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub statistic: T,
    pub p_value: T,
    pub df: Option<T>,
    pub df2: Option<T>,
    pub method: TestMethod,
    pub degenerate: bool,
}

impl<T: crate::Scalar> TestResult<T> {
    pub(crate) fn new(method: TestMethod, statistic: T, p_value: f64) -> Self {
        TestResult {
            statistic,
            p_value: T::of(p_value.clamp(0.0, 1.0)),
            df: None,
            df2: None,
            method,
            degenerate: false,
        }
    }

    pub(crate) fn with_df(mut self, df: T) -> Self {
        self.df = Some(df);
        self
    }

    pub(crate) fn with_df2(mut self, df2: T) -> Self {
        self.df2 = Some(df2);
        self
    }

    pub(crate) fn flagged(mut self) -> Self {
        self.degenerate = true;
        self
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value.to_f64_lossy() < alpha
    }
}

pub(crate) fn require_len<T>(what: &'static str, xs: &[T], need: usize) -> Result<(), StatsError> {
    if xs.len() < need {
        Err(StatsError::TooFewObservations {
            what,
            need,
            got: xs.len(),
        })
    } else {
        Ok(())
    }
}
