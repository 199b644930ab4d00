use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::profile::{Raw, Standardized, StructuralProfile, PROFILE_DIMS};
use super::MetricsError;
use crate::corpus::ConditionLabel;
use crate::evalgen::FeatureTable;
use crate::{Dimension, Scalar};

/// Which essays define the standardization frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StandardizeMode {
    /// Mean and SD over every condition together.
    #[default]
    Pooled,
    /// Mean and SD of the human-only essays.
    HOnly,
}

impl StandardizeMode {
    pub fn key(self) -> &'static str {
        match self {
            StandardizeMode::Pooled => "pooled",
            StandardizeMode::HOnly => "h-only",
        }
    }
}

impl FromStr for StandardizeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pooled" => Ok(StandardizeMode::Pooled),
            "h-only" | "h_only" | "h" => Ok(StandardizeMode::HOnly),
            other => Err(format!("unknown standardization mode `{other}` (pooled | h-only)")),
        }
    }
}

/// Per-dimension location and scale of a z-transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams<T> {
    pub mode: StandardizeMode,
    pub n: usize,
    pub means: [T; PROFILE_DIMS],
    /// Population (divide-by-n) standard deviations.
    pub sds: [T; PROFILE_DIMS],
}

/// Fitted z-transform. Uses the population SD so the reference set has
/// exactly unit SD afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer<T> {
    params: StandardizationParams<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(reference: &[StructuralProfile<T, Raw>], mode: StandardizeMode) -> Result<Self, MetricsError> {
        if reference.len() < 2 {
            return Err(MetricsError::TooFew {
                what: "standardization reference",
                need: 2,
                got: reference.len(),
            });
        }
        let n = T::of_usize(reference.len());
        let mut means = [T::zero(); PROFILE_DIMS];
        let mut sds = [T::zero(); PROFILE_DIMS];
        for d in 0..PROFILE_DIMS {
            let m = reference.iter().map(|p| p[d]).sum::<T>() / n;
            let ss = reference.iter().map(|p| (p[d] - m) * (p[d] - m)).sum::<T>();
            let sd = (ss / n).sqrt();
            if !(sd > T::zero()) {
                return Err(MetricsError::ZeroVariance(format!(
                    "{} has no spread in the standardization reference",
                    Dimension::STRUCTURAL[d].key()
                )));
            }
            means[d] = m;
            sds[d] = sd;
        }
        Ok(Standardizer {
            params: StandardizationParams {
                mode,
                n: reference.len(),
                means,
                sds,
            },
        })
    }

    pub fn params(&self) -> &StandardizationParams<T> {
        &self.params
    }

    pub fn apply(&self, p: &StructuralProfile<T, Raw>) -> StructuralProfile<T, Standardized> {
        let mut v = [T::zero(); PROFILE_DIMS];
        for (d, slot) in v.iter_mut().enumerate() {
            *slot = (p[d] - self.params.means[d]) / self.params.sds[d];
        }
        StructuralProfile::with_scale(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedRow {
    pub essay_id: String,
    pub condition: ConditionLabel,
    pub topic_id: u32,
    pub profile: StructuralProfile<f64, Standardized>,
}

/// Standardized structural profiles of a feature table, with the transform
/// that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedFeatures {
    pub params: StandardizationParams<f64>,
    pub rows: Vec<StandardizedRow>,
}

impl StandardizedFeatures {
    pub fn profiles(&self, condition: ConditionLabel) -> Vec<StructuralProfile<f64, Standardized>> {
        self.rows
            .iter()
            .filter(|r| r.condition == condition)
            .map(|r| r.profile)
            .collect()
    }
}

pub fn zscore_standardize(table: &FeatureTable, mode: StandardizeMode) -> Result<StandardizedFeatures, MetricsError> {
    let raw: Vec<StructuralProfile<f64>> = table
        .rows()
        .iter()
        .map(|r| StructuralProfile::from_scores(&r.mean))
        .collect();
    let reference: Vec<StructuralProfile<f64>> = match mode {
        StandardizeMode::Pooled => raw.clone(),
        StandardizeMode::HOnly => table
            .rows()
            .iter()
            .zip(&raw)
            .filter(|(r, _)| r.condition == ConditionLabel::HumanOnly)
            .map(|(_, p)| *p)
            .collect(),
    };
    let z = Standardizer::fit(&reference, mode)?;
    let rows = table
        .rows()
        .iter()
        .zip(&raw)
        .map(|(r, p)| StandardizedRow {
            essay_id: r.essay_id.clone(),
            condition: r.condition,
            topic_id: r.topic_id,
            profile: z.apply(p),
        })
        .collect();
    Ok(StandardizedFeatures {
        params: z.params().clone(),
        rows,
    })
}
