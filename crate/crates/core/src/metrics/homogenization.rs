use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::corpus::ConditionLabel;
use crate::evalgen::FeatureTable;
use crate::stats::{bootstrap_ci, brown_forsythe, variance, BootstrapCi, BootstrapConfig, SeedStream, TestResult};
use crate::{Dimension, Scalar};

fn require_two<T>(xs: &[T], what: &'static str) -> Result<(), MetricsError> {
    if xs.len() < 2 {
        return Err(MetricsError::TooFew {
            what,
            need: 2,
            got: xs.len(),
        });
    }
    Ok(())
}

/// `var(h) / var(aug)` with sample variances.
///
/// Zero augmented variance gives `+∞` (or 1 when both are zero); callers
/// should treat a non-finite ratio as a flagged value.
pub fn variance_ratio<T: Scalar>(h: &[T], aug: &[T]) -> Result<T, MetricsError> {
    require_two(h, "variance_ratio baseline")?;
    require_two(aug, "variance_ratio augmented")?;
    Ok(ratio_of_variances(h, aug))
}

fn ratio_of_variances<T: Scalar>(h: &[T], aug: &[T]) -> T {
    let vh = variance(h);
    let va = variance(aug);
    if va == T::zero() {
        return if vh == T::zero() { T::one() } else { T::infinity() };
    }
    vh / va
}

/// `1 − var(aug) / var(h)`.
pub fn homogenization_index<T: Scalar>(h: &[T], aug: &[T]) -> Result<T, MetricsError> {
    require_two(h, "homogenization_index baseline")?;
    require_two(aug, "homogenization_index augmented")?;
    let vh = variance(h);
    if vh == T::zero() {
        return Err(MetricsError::ZeroVariance("baseline sample".into()));
    }
    Ok(T::one() - variance(aug) / vh)
}

pub fn hi_from_vr<T: Scalar>(vr: T) -> T {
    T::one() - vr.recip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct DimensionHomogenization<T> {
    pub dimension: Dimension,
    #[serde(with = "crate::serde_float")]
    pub vr: T,
    pub vr_ci: BootstrapCi<T>,
    pub brown_forsythe: TestResult<T>,
    #[serde(with = "crate::serde_float")]
    pub hi: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct HomogenizationProfile<T> {
    pub baseline: ConditionLabel,
    pub target: ConditionLabel,
    pub dimensions: Vec<DimensionHomogenization<T>>,
}

impl<T: Scalar> HomogenizationProfile<T> {
    pub fn get(&self, dim: Dimension) -> Option<&DimensionHomogenization<T>> {
        self.dimensions.iter().find(|d| d.dimension == dim)
    }
}

fn vr_statistic<T: Scalar>(groups: &[&[T]]) -> Option<T> {
    Some(ratio_of_variances(groups[0], groups[1]))
}

/// VR, bootstrap CI, Brown–Forsythe and HI for one dimension.
///
/// HI is derived from VR so the two agree exactly.
pub fn dimension_homogenization<T: Scalar>(
    dimension: Dimension,
    h: &[T],
    aug: &[T],
    bootstrap: &BootstrapConfig,
) -> Result<DimensionHomogenization<T>, MetricsError> {
    let vr = variance_ratio(h, aug)?;
    let vr_ci = bootstrap_ci(&[h, aug], vr_statistic, bootstrap)?;
    Ok(DimensionHomogenization {
        dimension,
        vr,
        vr_ci,
        brown_forsythe: brown_forsythe(&[h, aug])?,
        hi: hi_from_vr(vr),
    })
}

/// Baseline-vs-target homogenization on every structural dimension. Each
/// dimension bootstraps from its own child of `bootstrap.seed`.
pub fn homogenization_profile(
    table: &FeatureTable,
    baseline: ConditionLabel,
    target: ConditionLabel,
    bootstrap: &BootstrapConfig,
) -> Result<HomogenizationProfile<f64>, MetricsError> {
    let stream = SeedStream::new(bootstrap.seed).child(target.code());
    let dimensions = Dimension::STRUCTURAL
        .iter()
        .map(|&dim| {
            let cfg = BootstrapConfig {
                seed: stream.child(dim.index() as u64).seed(),
                ..bootstrap.clone()
            };
            dimension_homogenization(dim, &table.values(baseline, dim), &table.values(target, dim), &cfg)
        })
        .collect::<Result<_, _>>()?;
    Ok(HomogenizationProfile {
        baseline,
        target,
        dimensions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_reciprocity() {
        let h = [1.0f64, 4.0, 2.0, 8.0, 5.0];
        let a = [2.0f64, 2.5, 3.0, 3.5, 2.0];
        assert_eq!(variance_ratio(&h, &h).unwrap(), 1.0);
        assert_eq!(homogenization_index(&h, &h).unwrap(), 0.0);
        let vr = variance_ratio(&h, &a).unwrap();
        assert!((vr * variance_ratio(&a, &h).unwrap() - 1.0).abs() < 1e-12);
        let hi = homogenization_index(&h, &a).unwrap();
        assert!((hi - hi_from_vr(vr)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_variances() {
        assert!(variance_ratio(&[1.0f64, 2.0], &[3.0, 3.0]).unwrap().is_infinite());
        assert_eq!(variance_ratio(&[1.0, 1.0], &[3.0, 3.0]).unwrap(), 1.0);
        assert!(matches!(
            homogenization_index(&[1.0, 1.0], &[1.0, 2.0]),
            Err(MetricsError::ZeroVariance(_))
        ));
        assert!(variance_ratio(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn works_in_f32() {
        let vr = variance_ratio(&[0.0f32, 2.0, 4.0], &[1.0f32, 2.0, 3.0]).unwrap();
        assert!((vr - 4.0).abs() < 1e-6);
    }
}
