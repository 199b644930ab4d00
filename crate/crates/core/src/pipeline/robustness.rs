use serde::{Deserialize, Serialize};

use super::config::AnalysisConfig;
use super::stages::{
    stage1_tradeoff, stage2_dimensional, stage4_moderation, Direction, HiMatrix, ModerationReport,
    TradeoffVerdict,
};
use super::PipelineError;
use crate::corpus::ConditionLabel;
use crate::evalgen::FeatureTable;
use crate::stats::{mann_whitney_u, BootstrapConfig, SeedStream, TestResult};
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicBiasRow {
    pub dimension: Dimension,
    pub topic_a: u32,
    pub topic_b: u32,
    pub median_a: f64,
    pub median_b: f64,
    pub test: TestResult<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicBiasReport {
    pub condition: ConditionLabel,
    pub topics: Vec<u32>,
    pub rows: Vec<TopicBiasRow>,
}

/// Mann–Whitney comparison of every pair of topics on every dimension,
/// within one condition.
pub fn topic_bias_check(
    table: &FeatureTable,
    condition: ConditionLabel,
    alpha: f64,
) -> Result<TopicBiasReport, PipelineError> {
    let subset = FeatureTable::new(table.by_condition(condition).cloned().collect());
    let topics: Vec<u32> = subset.topics().into_iter().collect();
    if topics.len() < 2 {
        return Err(PipelineError::InsufficientData(format!(
            "topic bias check needs two topics in {}, found {}",
            condition.short(),
            topics.len()
        )));
    }
    let mut rows = Vec::new();
    for dim in Dimension::ALL {
        for (i, &ta) in topics.iter().enumerate() {
            for &tb in &topics[i + 1..] {
                let a = subset.restrict_topic(ta).values(condition, dim);
                let b = subset.restrict_topic(tb).values(condition, dim);
                let test = mann_whitney_u(&a, &b)?;
                rows.push(TopicBiasRow {
                    dimension: dim,
                    topic_a: ta,
                    topic_b: tb,
                    median_a: crate::stats::median(&a),
                    median_b: crate::stats::median(&b),
                    significant: test.p_value < alpha,
                    test,
                });
            }
        }
    }
    Ok(TopicBiasReport {
        condition,
        topics,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicStages {
    pub topic: u32,
    pub n: usize,
    pub stage1: Option<Vec<TradeoffVerdict>>,
    pub stage2: Option<HiMatrix>,
    pub stage4: Option<ModerationReport>,
    /// Why a stage did not run for this topic.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consistency {
    Consistent,
    Partial,
    Reversed,
}

impl Consistency {
    pub fn key(self) -> &'static str {
        match self {
            Consistency::Consistent => "consistent",
            Consistency::Partial => "partial",
            Consistency::Reversed => "reversed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub finding: String,
    /// `(topic, summary)` for each topic that produced the finding.
    pub per_topic: Vec<(u32, String)>,
    pub consistency: Consistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub topics: Vec<TopicStages>,
    pub findings: Vec<Finding>,
}

fn keep<T>(notes: &mut Vec<String>, topic: u32, stage: &str, r: Result<T, PipelineError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("topic {topic}: {stage} skipped: {e}");
            notes.push(format!("{stage}: {e}"));
            None
        }
    }
}

fn range(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

/// Labels per-topic directions: identical everywhere is consistent,
/// homogenized on one topic and diversified on another is reversed,
/// anything else partial.
fn direction_consistency(dirs: &[Direction]) -> Consistency {
    if dirs.windows(2).all(|w| w[0] == w[1]) {
        Consistency::Consistent
    } else if dirs.contains(&Direction::Homogenized) && dirs.contains(&Direction::Diversified) {
        Consistency::Reversed
    } else {
        Consistency::Partial
    }
}

/// Reruns stages 1, 2 and 4 on each topic separately and compares the main
/// findings across topics.
pub fn topic_robustness(table: &FeatureTable, config: &AnalysisConfig) -> Result<RobustnessReport, PipelineError> {
    let topics: Vec<u32> = table.topics().into_iter().collect();
    if topics.len() < 2 {
        return Err(PipelineError::InsufficientData(format!(
            "topic robustness needs two topics, found {}",
            topics.len()
        )));
    }
    let targets = config.target_labels();
    let stream = SeedStream::new(config.seed).child(0x7091c);
    let mut per_topic = Vec::new();
    for &topic in &topics {
        let sub = table.restrict_topic(topic);
        let mut notes = Vec::new();
        let boot = BootstrapConfig {
            n_resamples: config.n_resamples,
            level: config.ci_level,
            seed: stream.child(topic as u64).seed(),
            ..BootstrapConfig::default()
        };
        let s1 = keep(&mut notes, topic, "stage 1", stage1_tradeoff(&sub, config.baseline, &targets, config.alpha, &boot));
        let s2 = keep(
            &mut notes,
            topic,
            "stage 2",
            stage2_dimensional(
                &sub,
                config.baseline,
                &targets,
                config.hi_reporting_threshold,
                config.hi_direction_threshold,
            ),
        );
        let s4 = keep(
            &mut notes,
            topic,
            "stage 4",
            stage4_moderation(
                &sub,
                config.baseline,
                &targets,
                config.alpha,
                config.hi_reporting_threshold,
                config.hi_direction_threshold,
            ),
        );
        per_topic.push(TopicStages {
            topic,
            n: sub.len(),
            stage1: s1,
            stage2: s2,
            stage4: s4,
            notes,
        });
    }

    let mut findings = Vec::new();
    let with_s1: Vec<(u32, &Vec<TradeoffVerdict>)> = per_topic
        .iter()
        .filter_map(|t| t.stage1.as_ref().map(|s| (t.topic, s)))
        .collect();
    if with_s1.len() >= 2 {
        let summaries = with_s1
            .iter()
            .map(|(topic, v)| {
                let (lo, hi) = range(v.iter().map(|x| x.quality.cohens_d));
                let held = v.iter().filter(|x| x.verdict).count();
                (*topic, format!("d = {lo:.2} to {hi:.2}; verdict {held}/{}", v.len()))
            })
            .collect();
        let patterns: Vec<Vec<bool>> = with_s1.iter().map(|(_, v)| v.iter().map(|x| x.verdict).collect()).collect();
        let signs: Vec<Vec<bool>> = with_s1
            .iter()
            .map(|(_, v)| v.iter().map(|x| x.quality.delta_mean > 0.0).collect())
            .collect();
        let consistency = if patterns.windows(2).all(|w| w[0] == w[1]) {
            Consistency::Consistent
        } else if signs.windows(2).any(|w| w[0] != w[1]) {
            Consistency::Reversed
        } else {
            Consistency::Partial
        };
        findings.push(Finding {
            finding: "quality_tradeoff".into(),
            per_topic: summaries,
            consistency,
        });
    }
    let with_s2: Vec<(u32, &HiMatrix)> = per_topic
        .iter()
        .filter_map(|t| t.stage2.as_ref().map(|s| (t.topic, s)))
        .collect();
    if with_s2.len() >= 2 {
        for dim in Dimension::STRUCTURAL {
            let rows: Vec<(u32, _)> = with_s2.iter().filter_map(|(t, m)| m.row(dim).map(|r| (*t, r))).collect();
            let dirs: Vec<Direction> = rows.iter().map(|(_, r)| r.direction).collect();
            findings.push(Finding {
                finding: format!("{}_direction", dim.key()),
                per_topic: rows
                    .iter()
                    .map(|(t, r)| {
                        let (lo, hi) = range(r.hi.iter().copied());
                        (*t, format!("{}; HI = {lo:+.2} to {hi:+.2}", r.direction.key()))
                    })
                    .collect(),
                consistency: direction_consistency(&dirs),
            });
        }
    }
    Ok(RobustnessReport {
        topics: per_topic,
        findings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_rule() {
        use Direction::*;
        assert_eq!(direction_consistency(&[Homogenized, Homogenized]), Consistency::Consistent);
        assert_eq!(direction_consistency(&[PromptDependent, PromptDependent]), Consistency::Consistent);
        assert_eq!(direction_consistency(&[Diversified, Homogenized]), Consistency::Reversed);
        assert_eq!(direction_consistency(&[None, Diversified]), Consistency::Partial);
    }
}
