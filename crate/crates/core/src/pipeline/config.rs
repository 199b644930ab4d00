use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{ConditionLabel, PromptStrategy};
use crate::evalgen::FeatureTable;
use crate::metrics::StandardizeMode;
use crate::Dimension;

/// Every knob of an analysis run. Serialized into the report as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub baseline: ConditionLabel,
    pub targets: Vec<PromptStrategy>,
    pub n_resamples: usize,
    pub ci_level: f64,
    pub n_permutations: usize,
    /// Master seed; every randomized step derives its own seed from it.
    pub seed: u64,
    pub standardize: StandardizeMode,
    pub resample_axis: bool,
    /// Minimum |HI| on each side for a sign conflict to count as prompt
    /// dependence.
    pub hi_reporting_threshold: f64,
    /// Minimum |mean HI| for a homogenized/diversified label.
    pub hi_direction_threshold: f64,
    pub cv_threshold: f64,
    pub tercile_dimension: Dimension,
    pub threshold_dimension: Dimension,
    pub threshold_low_cut: f64,
    pub threshold_high_cut: f64,
    pub topic_split: bool,
    /// Analysis stages to run, from 1 to 4. Follow-up analyses run with
    /// stage 1.
    pub stages: Vec<u8>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.05,
            baseline: ConditionLabel::HumanOnly,
            targets: PromptStrategy::ALL.to_vec(),
            n_resamples: 10_000,
            ci_level: 0.95,
            n_permutations: 10_000,
            seed: 20_240_601,
            standardize: StandardizeMode::Pooled,
            resample_axis: true,
            hi_reporting_threshold: 0.10,
            hi_direction_threshold: 0.05,
            cv_threshold: 0.10,
            tercile_dimension: Dimension::CohesionArchitecture,
            threshold_dimension: Dimension::StructuralOriginality,
            threshold_low_cut: 1.0,
            threshold_high_cut: 2.5,
            topic_split: false,
            stages: vec![1, 2, 3, 4],
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::InvalidConfig(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return bad(format!("ci_level {} outside (0, 1)", self.ci_level));
        }
        if self.n_resamples == 0 || self.n_permutations == 0 {
            return bad("n_resamples and n_permutations must be >= 1".into());
        }
        if self.targets.is_empty() {
            return bad("no target conditions".into());
        }
        if self.baseline.is_augmented() {
            return bad("baseline must be H or A".into());
        }
        if self.threshold_low_cut > self.threshold_high_cut {
            return bad("threshold_low_cut exceeds threshold_high_cut".into());
        }
        if !(self.cv_threshold > 0.0) {
            return bad("cv_threshold must be positive".into());
        }
        if self.stages.is_empty() || self.stages.iter().any(|s| !(1..=4).contains(s)) {
            return bad(format!("stages {:?} must be drawn from 1..=4", self.stages));
        }
        Ok(())
    }

    pub fn target_labels(&self) -> Vec<ConditionLabel> {
        self.targets.iter().map(|&s| ConditionLabel::HumanPlusAi(s)).collect()
    }

    pub fn runs_stage(&self, stage: u8) -> bool {
        self.stages.contains(&stage)
    }
}

pub(crate) fn require_condition(table: &FeatureTable, c: ConditionLabel, min: usize) -> Result<(), PipelineError> {
    let n = table.count(c);
    if n == 0 {
        return Err(PipelineError::MissingCondition(c));
    }
    if n < min {
        return Err(PipelineError::InsufficientData(format!(
            "condition {} has {n} essay(s), need at least {min}",
            c.short()
        )));
    }
    Ok(())
}
