use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{centroid, perpendicular_distance, replacement_ratio};
use super::profile::{Standardized, StructuralProfile, PROFILE_DIMS};
use super::MetricsError;
use crate::stats::rng::StreamRng;
use crate::stats::SeedStream;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmergenceConfig {
    pub n_permutations: usize,
    pub seed: u64,
    /// Rebuild the H–A axis from resampled H and A in every permutation, so
    /// the null carries the sampling noise of the observed axis too. When
    /// false the axis stays at the observed centroids.
    pub resample_axis: bool,
}

impl Default for EmergenceConfig {
    fn default() -> Self {
        EmergenceConfig {
            n_permutations: 10_000,
            seed: 0,
            resample_axis: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceResult<T> {
    /// Perpendicular distance of the augmented centroid from the H–A line.
    pub observed: T,
    pub p_value: f64,
    /// Mixing weight of the null, the observed replacement ratio.
    pub lambda: T,
    pub n_permutations: usize,
    pub exceedances: usize,
}

fn resampled_mean<T: Scalar>(
    profiles: &[StructuralProfile<T, Standardized>],
    draws: usize,
    rng: &mut StreamRng,
) -> [T; PROFILE_DIMS] {
    let mut acc = [T::zero(); PROFILE_DIMS];
    for _ in 0..draws {
        let p = &profiles[rng.random_range(0..profiles.len())];
        for (a, x) in acc.iter_mut().zip(p.values()) {
            *a = *a + *x;
        }
    }
    let n = T::of_usize(draws);
    acc.map(|a| a / n)
}

fn require(what: &'static str, n: usize) -> Result<(), MetricsError> {
    if n < 2 {
        return Err(MetricsError::TooFew { what, need: 2, got: n });
    }
    Ok(())
}

/// Tests whether the augmented centroid sits off the H–A line.
///
/// Null samples are centroids of pseudo-augmented sets whose points are
/// `λ·a + (1−λ)·h`, with `h` and `a` drawn with replacement from the H and A
/// profiles and `λ` the observed replacement ratio. Permutation `i` draws from
/// substream `i`, so the p value is the same under any thread count.
/// `p = (1 + #{null ≥ observed}) / (1 + n_permutations)`.
pub fn emergence_test<T: Scalar>(
    h: &[StructuralProfile<T, Standardized>],
    a: &[StructuralProfile<T, Standardized>],
    aug: &[StructuralProfile<T, Standardized>],
    config: &EmergenceConfig,
) -> Result<EmergenceResult<T>, MetricsError> {
    require("emergence H profiles", h.len())?;
    require("emergence A profiles", a.len())?;
    require("emergence augmented profiles", aug.len())?;
    if config.n_permutations == 0 {
        return Err(MetricsError::InvalidParameter("n_permutations must be >= 1".into()));
    }
    let c_h = centroid(h)?;
    let c_a = centroid(a)?;
    let c_aug = centroid(aug)?;
    let observed = perpendicular_distance(&c_aug, &c_h, &c_a)?;
    let lambda = replacement_ratio(&c_aug, &c_h, &c_a)?;
    let one_minus = T::one() - lambda;

    let stream = SeedStream::new(config.seed);
    let exceedances = (0..config.n_permutations)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.rng(i as u64);
            let (axis_h, axis_a) = if config.resample_axis {
                (
                    StructuralProfile::with_scale(resampled_mean(h, h.len(), &mut rng)),
                    StructuralProfile::with_scale(resampled_mean(a, a.len(), &mut rng)),
                )
            } else {
                (c_h, c_a)
            };
            // mean of the mixtures = mix of the means of the drawn h and a
            let mh = resampled_mean(h, aug.len(), &mut rng);
            let ma = resampled_mean(a, aug.len(), &mut rng);
            let pseudo = StructuralProfile::with_scale(std::array::from_fn(|d| lambda * ma[d] + one_minus * mh[d]));
            // a resampled axis can collapse only with degenerate inputs; count it as extreme
            perpendicular_distance(&pseudo, &axis_h, &axis_a).map_or(true, |d| d >= observed)
        })
        .filter(|&hit| hit)
        .count();

    Ok(EmergenceResult {
        observed,
        p_value: (1 + exceedances) as f64 / (1 + config.n_permutations) as f64,
        lambda,
        n_permutations: config.n_permutations,
        exceedances,
    })
}

/// Where an augmented condition sits relative to H and A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult<T> {
    pub centroid_h: StructuralProfile<T, Standardized>,
    pub centroid_a: StructuralProfile<T, Standardized>,
    pub centroid_aug: StructuralProfile<T, Standardized>,
    pub d_to_h: T,
    pub d_to_a: T,
    pub rr: T,
    pub perpendicular_distance: T,
    pub emergence_p: f64,
    pub n_permutations: usize,
}

pub fn convergence<T: Scalar>(
    h: &[StructuralProfile<T, Standardized>],
    a: &[StructuralProfile<T, Standardized>],
    aug: &[StructuralProfile<T, Standardized>],
    config: &EmergenceConfig,
) -> Result<ConvergenceResult<T>, MetricsError> {
    let e = emergence_test(h, a, aug, config)?;
    let centroid_h = centroid(h)?;
    let centroid_a = centroid(a)?;
    let centroid_aug = centroid(aug)?;
    let d_to_h = centroid_aug.distance(&centroid_h);
    let d_to_a = centroid_aug.distance(&centroid_a);
    Ok(ConvergenceResult {
        centroid_h,
        centroid_a,
        centroid_aug,
        d_to_h,
        d_to_a,
        rr: e.lambda,
        perpendicular_distance: e.observed,
        emergence_p: e.p_value,
        n_permutations: e.n_permutations,
    })
}
