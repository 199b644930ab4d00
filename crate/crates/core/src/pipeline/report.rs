use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::AnalysisConfig;
use super::convergence::{tercile_convergence, threshold_convergence, TercileReport, ThresholdReport};
use super::robustness::{topic_bias_check, topic_robustness, RobustnessReport, TopicBiasReport};
use super::stages::{
    stage1_tradeoff, stage2_dimensional, stage3_convergence, stage4_moderation, ConvergenceReport,
    HiMatrix, ModerationReport, TradeoffVerdict,
};
use super::PipelineError;
use crate::corpus::{ConditionLabel, CorpusSet, LOW_N};
use crate::evalgen::{validate_stability, FeatureTable, StabilityReport};
use crate::metrics::EmergenceConfig;
use crate::stats::{BootstrapConfig, SampleSummary, SeedStream};
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    /// Stable machine-readable category, e.g. `missing_condition`.
    pub kind: String,
    /// Short label of the missing condition, when that is the cause.
    pub condition: Option<String>,
    pub message: String,
}

impl From<PipelineError> for StageFailure {
    fn from(e: PipelineError) -> Self {
        let (kind, condition) = match &e {
            PipelineError::MissingCondition(c) => ("missing_condition", Some(c.short().to_string())),
            PipelineError::InsufficientData(_) => ("insufficient_data", None),
            PipelineError::InvalidConfig(_) => ("invalid_config", None),
            PipelineError::Metrics(_) | PipelineError::Stats(_) => ("computation", None),
            PipelineError::Io { .. } | PipelineError::Format { .. } => ("io", None),
        };
        StageFailure {
            kind: kind.into(),
            condition,
            message: e.to_string(),
        }
    }
}

/// Result of one analysis step. A failure never suppresses other steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "result", rename_all = "snake_case")]
pub enum StageOutcome<T> {
    Ok(T),
    Failed(StageFailure),
    Skipped(String),
}

impl<T> StageOutcome<T> {
    fn from_result(stage: &str, r: Result<T, PipelineError>) -> Self {
        match r {
            Ok(v) => StageOutcome::Ok(v),
            Err(e) => {
                log::error!("{stage} failed: {e}");
                StageOutcome::Failed(e.into())
            }
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            StageOutcome::Ok(v) => Some(v),
            _ => None,
        }
    }

    pub fn failure(&self) -> Option<&StageFailure> {
        match self {
            StageOutcome::Failed(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptive {
    pub condition: ConditionLabel,
    pub dimension: Dimension,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    pub median: f64,
}

/// Mean, SD and median of every condition on every dimension.
pub fn descriptives(table: &FeatureTable) -> Vec<Descriptive> {
    let mut out = Vec::new();
    for cond in ConditionLabel::ALL {
        if table.count(cond) == 0 {
            continue;
        }
        for dim in Dimension::ALL {
            let xs = table.values(cond, dim);
            let s = SampleSummary::of(&xs).ok();
            out.push(Descriptive {
                condition: cond,
                dimension: dim,
                n: xs.len(),
                mean: crate::stats::mean(&xs),
                sd: s.map(|s| s.sd),
                median: crate::stats::median(&xs),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCharacteristic {
    pub condition: ConditionLabel,
    pub n: usize,
    pub mean_chars: f64,
    pub sd_chars: Option<f64>,
    /// Mean length minus the H mean length.
    pub difference_from_h: Option<f64>,
}

pub fn text_characteristics(corpus: &CorpusSet) -> Vec<TextCharacteristic> {
    let lengths = |c| -> Vec<f64> { corpus.by_condition(c).map(|r| r.char_count as f64).collect() };
    let h = lengths(ConditionLabel::HumanOnly);
    let h_mean = (!h.is_empty()).then(|| crate::stats::mean(&h));
    ConditionLabel::ALL
        .into_iter()
        .filter_map(|c| {
            let xs = lengths(c);
            if xs.is_empty() {
                return None;
            }
            let m = crate::stats::mean(&xs);
            Some(TextCharacteristic {
                condition: c,
                n: xs.len(),
                mean_chars: m,
                sd_chars: SampleSummary::of(&xs).ok().map(|s| s.sd),
                difference_from_h: h_mean.map(|hm| m - hm),
            })
        })
        .collect()
}

/// SHA-256 over the feature rows in essay-id order.
pub fn feature_fingerprint(table: &FeatureTable) -> String {
    let mut h = Sha256::new();
    for r in table.rows() {
        h.update(serde_json::to_string(r).expect("feature rows serialize").as_bytes());
        h.update(b"\n");
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub bootstrap: u64,
    pub permutation: u64,
    pub robustness: u64,
}

impl SeedRecord {
    fn derive(master: u64) -> Self {
        let s = SeedStream::new(master);
        SeedRecord {
            master,
            bootstrap: s.child(1).seed(),
            permutation: s.child(3).seed(),
            robustness: s.child(11).seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub config: AnalysisConfig,
    pub seeds: SeedRecord,
    pub fingerprint: String,
    pub n_essays: usize,
    pub condition_counts: Vec<(ConditionLabel, usize)>,
    /// Conditions below the low-n threshold; their tests are unreliable.
    pub low_n: Vec<ConditionLabel>,
    pub descriptives: Vec<Descriptive>,
    pub text_characteristics: Option<Vec<TextCharacteristic>>,
    pub stability: StabilityReport,
    pub topic_bias: StageOutcome<TopicBiasReport>,
    pub stage1: StageOutcome<Vec<TradeoffVerdict>>,
    pub stage2: StageOutcome<HiMatrix>,
    pub stage3: StageOutcome<ConvergenceReport>,
    pub stage4: StageOutcome<ModerationReport>,
    pub terciles: StageOutcome<Vec<TercileReport>>,
    pub thresholds: StageOutcome<Vec<ThresholdReport>>,
    pub robustness: StageOutcome<RobustnessReport>,
}

impl AnalysisReport {
    /// Failures of the stages that were asked for, in stage order.
    pub fn failures(&self) -> Vec<(&'static str, &StageFailure)> {
        [
            ("stage1", self.stage1.failure()),
            ("stage2", self.stage2.failure()),
            ("stage3", self.stage3.failure()),
            ("stage4", self.stage4.failure()),
            ("terciles", self.terciles.failure()),
            ("thresholds", self.thresholds.failure()),
            ("robustness", self.robustness.failure()),
        ]
        .into_iter()
        .filter_map(|(n, f)| f.map(|f| (n, f)))
        .collect()
    }
}

fn skipped<T>(stage: u8) -> StageOutcome<T> {
    StageOutcome::Skipped(format!("stage {stage} not selected"))
}

/// Runs every selected stage. Only an unusable configuration or an empty
/// feature table is an error; stage failures are recorded in the report.
pub fn full_report(
    corpus: Option<&CorpusSet>,
    table: &FeatureTable,
    config: &AnalysisConfig,
) -> Result<AnalysisReport, PipelineError> {
    config.validate()?;
    if table.is_empty() {
        return Err(PipelineError::InsufficientData("feature table is empty".into()));
    }
    let seeds = SeedRecord::derive(config.seed);
    let targets = config.target_labels();
    let boot = BootstrapConfig {
        n_resamples: config.n_resamples,
        level: config.ci_level,
        seed: seeds.bootstrap,
        ..BootstrapConfig::default()
    };
    let emergence = EmergenceConfig {
        n_permutations: config.n_permutations,
        seed: seeds.permutation,
        resample_axis: config.resample_axis,
    };

    let condition_counts: Vec<(ConditionLabel, usize)> =
        ConditionLabel::ALL.into_iter().map(|c| (c, table.count(c))).collect();
    let low_n = condition_counts
        .iter()
        .filter(|(_, n)| *n > 0 && *n < LOW_N)
        .map(|(c, _)| *c)
        .collect::<Vec<_>>();
    for c in &low_n {
        log::warn!("condition {} has fewer than {LOW_N} essays; tests are flagged low-n", c.short());
    }

    let stage1 = if config.runs_stage(1) {
        StageOutcome::from_result(
            "stage 1",
            stage1_tradeoff(table, config.baseline, &targets, config.alpha, &boot),
        )
    } else {
        skipped(1)
    };
    let stage2 = if config.runs_stage(2) {
        StageOutcome::from_result(
            "stage 2",
            stage2_dimensional(
                table,
                config.baseline,
                &targets,
                config.hi_reporting_threshold,
                config.hi_direction_threshold,
            ),
        )
    } else {
        skipped(2)
    };
    let stage3 = if config.runs_stage(3) {
        StageOutcome::from_result(
            "stage 3",
            stage3_convergence(table, &targets, config.standardize, &emergence),
        )
    } else {
        skipped(3)
    };
    let stage4 = if config.runs_stage(4) {
        StageOutcome::from_result(
            "stage 4",
            stage4_moderation(
                table,
                config.baseline,
                &targets,
                config.alpha,
                config.hi_reporting_threshold,
                config.hi_direction_threshold,
            ),
        )
    } else {
        skipped(4)
    };
    let (terciles, thresholds) = if config.runs_stage(1) {
        (
            StageOutcome::from_result(
                "tercile convergence",
                targets
                    .iter()
                    .map(|&t| tercile_convergence(table, config.tercile_dimension, config.baseline, t))
                    .collect(),
            ),
            StageOutcome::from_result(
                "threshold convergence",
                targets
                    .iter()
                    .map(|&t| {
                        threshold_convergence(
                            table,
                            config.threshold_dimension,
                            config.threshold_low_cut,
                            config.threshold_high_cut,
                            config.baseline,
                            t,
                        )
                    })
                    .collect(),
            ),
        )
    } else {
        (skipped(1), skipped(1))
    };
    let topic_bias = match topic_bias_check(table, config.baseline, config.alpha) {
        Ok(r) => StageOutcome::Ok(r),
        Err(e) => StageOutcome::Skipped(e.to_string()),
    };
    let robustness = if config.topic_split {
        let cfg = AnalysisConfig {
            seed: seeds.robustness,
            ..config.clone()
        };
        StageOutcome::from_result("topic robustness", topic_robustness(table, &cfg))
    } else {
        StageOutcome::Skipped("topic split not requested".into())
    };

    Ok(AnalysisReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        seeds,
        fingerprint: feature_fingerprint(table),
        n_essays: table.len(),
        condition_counts,
        low_n,
        descriptives: descriptives(table),
        text_characteristics: corpus.map(text_characteristics),
        stability: validate_stability(table, config.cv_threshold),
        topic_bias,
        stage1,
        stage2,
        stage3,
        stage4,
        terciles,
        thresholds,
        robustness,
    })
}
