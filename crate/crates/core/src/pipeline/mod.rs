//! The four analysis stages, convergence follow-ups, topic robustness and
//! report assembly.

mod bundle;
mod config;
mod convergence;
mod report;
mod robustness;
mod stages;

use thiserror::Error;

use crate::corpus::ConditionLabel;
use crate::metrics::MetricsError;
use crate::stats::StatsError;

pub use bundle::{render_summary, write_bundle, BUNDLE_FILES};
pub use config::AnalysisConfig;
pub use convergence::{
    tercile_convergence, threshold_convergence, GroupChange, TercileReport, TercileRow,
    ThresholdReport,
};
pub use report::{
    descriptives, feature_fingerprint, full_report, text_characteristics, AnalysisReport,
    Descriptive, SeedRecord, StageFailure, StageOutcome, TextCharacteristic,
};
pub use robustness::{
    topic_bias_check, topic_robustness, Consistency, Finding, RobustnessReport, TopicBiasReport,
    TopicBiasRow, TopicStages,
};
pub use stages::{
    classify_direction, stage1_tradeoff, stage2_dimensional, stage3_convergence,
    stage4_moderation, ConditionConvergence, ConvergenceReport, DimensionTradeoff, Direction,
    HiMatrix, HiRow, ModerationReport, ModerationRow, QualityGain, TradeoffVerdict,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("condition {} is missing from the features", .0.short())]
    MissingCondition(ConditionLabel),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl PipelineError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
