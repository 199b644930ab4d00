use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::SeedStream;
use super::StatsError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
    /// Redraw budget per resample when the statistic is undefined.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            n_resamples: 10_000,
            level: 0.95,
            seed: 0,
            max_redraws: 100,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        BootstrapConfig {
            seed,
            ..Default::default()
        }
    }
}

/// Percentile bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct BootstrapCi<T> {
    #[serde(with = "crate::serde_float")]
    pub lower: T,
    #[serde(with = "crate::serde_float")]
    pub upper: T,
    pub level: f64,
    pub n_resamples: usize,
    pub seed: u64,
    /// Resamples on which the statistic was undefined and had to be redrawn.
    pub redraws: usize,
}

impl<T: Scalar> BootstrapCi<T> {
    pub fn contains(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Percentile bootstrap CI of `statistic` over independently resampled groups.
///
/// Each group is resampled with replacement at its own size. Resample `i`
/// draws from substream `i` of the seed, so the interval does not depend on
/// thread count or scheduling. A statistic returning `None` or NaN triggers
/// a redraw from the same substream; infinite values are kept.
pub fn bootstrap_ci<T, F>(
    groups: &[&[T]],
    statistic: F,
    config: &BootstrapConfig,
) -> Result<BootstrapCi<T>, StatsError>
where
    T: Scalar,
    F: Fn(&[&[T]]) -> Option<T> + Sync,
{
    if config.n_resamples == 0 {
        return Err(StatsError::InvalidParameter("n_resamples must be >= 1".into()));
    }
    if !(config.level > 0.0 && config.level < 1.0) {
        return Err(StatsError::InvalidParameter(format!(
            "confidence level {} outside (0, 1)",
            config.level
        )));
    }
    if groups.is_empty() || groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::TooFewObservations {
            what: "bootstrap_ci",
            need: 1,
            got: 0,
        });
    }
    let stream = SeedStream::new(config.seed);

    let draws: Vec<Result<(T, usize), StatsError>> = (0..config.n_resamples)
        .into_par_iter()
        .map_init(
            || groups.iter().map(|g| vec![T::zero(); g.len()]).collect::<Vec<_>>(),
            |buffers, i| {
                let mut rng = stream.rng(i as u64);
                for redraw in 0..=config.max_redraws {
                    for (buf, g) in buffers.iter_mut().zip(groups) {
                        for slot in buf.iter_mut() {
                            *slot = g[rng.random_range(0..g.len())];
                        }
                    }
                    let views: Vec<&[T]> = buffers.iter().map(Vec::as_slice).collect();
                    if let Some(v) = statistic(&views).filter(|v| !v.is_nan()) {
                        return Ok((v, redraw));
                    }
                }
                Err(StatsError::BootstrapExhausted {
                    resample: i,
                    redraws: config.max_redraws,
                })
            },
        )
        .collect();

    let mut values = Vec::with_capacity(draws.len());
    let mut redraws = 0;
    for d in draws {
        let (v, r) = d?;
        values.push(v);
        redraws += r;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("statistics are never NaN"));
    let tail = (1.0 - config.level) / 2.0;
    Ok(BootstrapCi {
        lower: percentile(&values, tail),
        upper: percentile(&values, 1.0 - tail),
        level: config.level,
        n_resamples: config.n_resamples,
        seed: config.seed,
        redraws,
    })
}

/// Linear-interpolation quantile of already sorted values.
pub fn percentile<T: Scalar>(sorted: &[T], q: f64) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    let frac = T::of(pos - lo as f64);
    if frac == T::zero() {
        return sorted[lo];
    }
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{mean, variance};
    use rand_distr::{Distribution, Normal};

    fn mean_stat(g: &[&[f64]]) -> Option<f64> {
        Some(mean(g[0]))
    }

    #[test]
    fn constant_group_gives_degenerate_interval() {
        let ci = bootstrap_ci(&[&[5.0, 5.0, 5.0, 5.0]], mean_stat, &BootstrapConfig::with_seed(1)).unwrap();
        assert_eq!((ci.lower, ci.upper), (5.0, 5.0));
    }

    #[test]
    fn deterministic_for_seed() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let cfg = BootstrapConfig {
            n_resamples: 500,
            ..BootstrapConfig::with_seed(9)
        };
        let a = bootstrap_ci(&[&xs], mean_stat, &cfg).unwrap();
        let b = bootstrap_ci(&[&xs], mean_stat, &cfg).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_ci(&[&xs], mean_stat, &BootstrapConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn undefined_statistic_is_redrawn() {
        // variance ratio is undefined whenever the second resample is constant
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.0, 0.0, 0.0, 1.0];
        let vr = |g: &[&[f64]]| {
            let d = variance(g[1]);
            (d > 0.0).then(|| variance(g[0]) / d)
        };
        let cfg = BootstrapConfig {
            n_resamples: 2000,
            ..BootstrapConfig::with_seed(3)
        };
        let ci = bootstrap_ci(&[&a, &b], vr, &cfg).unwrap();
        assert!(ci.redraws > 0);
        assert!(ci.lower <= ci.upper);

        let never = |_: &[&[f64]]| None;
        let err = bootstrap_ci(&[&a], never, &cfg).unwrap_err();
        assert!(matches!(err, StatsError::BootstrapExhausted { .. }));
    }

    #[test]
    fn invalid_config() {
        let cfg = BootstrapConfig {
            level: 1.0,
            ..Default::default()
        };
        assert!(bootstrap_ci(&[&[1.0]], mean_stat, &cfg).is_err());
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.5), 3.0);
        assert_eq!(percentile(&v, 0.125), 1.5);
        assert_eq!(percentile(&v, 1.0), 5.0);
    }

    #[test]
    fn mean_interval_coverage_is_calibrated() {
        let normal = Normal::new(10.0, 2.0).unwrap();
        let data_stream = SeedStream::new(2024);
        let trials = 200;
        let mut covered = 0;
        for t in 0..trials {
            let mut rng = data_stream.rng(t);
            let xs: Vec<f64> = (0..100).map(|_| normal.sample(&mut rng)).collect();
            let cfg = BootstrapConfig {
                n_resamples: 2000,
                ..BootstrapConfig::with_seed(t)
            };
            let ci = bootstrap_ci(&[&xs], mean_stat, &cfg).unwrap();
            if ci.contains(10.0) {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((0.91..=0.99).contains(&rate), "coverage {rate}");
    }
}
