use serde::{Deserialize, Serialize};

use super::{require_len, StatsError};
use crate::Scalar;

pub fn mean<T: Scalar>(xs: &[T]) -> T {
    xs.iter().copied().sum::<T>() / T::of_usize(xs.len())
}

/// Sample variance (n−1 denominator). Zero for fewer than two values.
pub fn variance<T: Scalar>(xs: &[T]) -> T {
    if xs.len() < 2 {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / T::of_usize(xs.len() - 1)
}

/// Population variance (n denominator).
pub fn population_variance<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    ss / T::of_usize(xs.len())
}

pub fn median<T: Scalar>(xs: &[T]) -> T {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("median of NaN"));
    let n = sorted.len();
    if n == 0 {
        return T::nan();
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / T::of(2.0)
    }
}

/// Location and spread of one condition-dimension cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary<T> {
    pub n: usize,
    pub mean: T,
    pub sd: T,
    pub median: T,
}

impl<T: Scalar> SampleSummary<T> {
    pub fn of(xs: &[T]) -> Result<Self, StatsError> {
        require_len("sample summary", xs, 2)?;
        Ok(SampleSummary {
            n: xs.len(),
            mean: mean(xs),
            sd: variance(xs).sqrt(),
            median: median(xs),
        })
    }

    /// Summary known only by its moments, e.g. a published mean (SD) cell.
    /// The median is unknown and set to the mean.
    pub fn from_moments(n: usize, mean: T, sd: T) -> Self {
        SampleSummary {
            n,
            mean,
            sd,
            median: mean,
        }
    }

    pub fn variance(&self) -> T {
        self.sd * self.sd
    }
}
