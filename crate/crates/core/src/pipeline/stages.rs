use serde::{Deserialize, Serialize};

use super::config::require_condition;
use super::PipelineError;
use crate::corpus::ConditionLabel;
use crate::evalgen::FeatureTable;
use crate::metrics::{
    convergence, hi_from_vr, homogenization_profile, project_2d, variance_ratio, zscore_standardize,
    ConvergenceResult, EmergenceConfig, Projection, StandardizationParams, StandardizeMode,
};
use crate::stats::{
    bonferroni, cohens_d, kruskal_wallis, levene_mean, mean, welch_t, BootstrapCi, BootstrapConfig,
    SeedStream, TestResult,
};
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityGain {
    pub baseline_mean: f64,
    pub target_mean: f64,
    pub delta_mean: f64,
    pub cohens_d: f64,
    pub welch: TestResult<f64>,
    /// Welch p times the number of targets, capped at 1.
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionTradeoff {
    pub dimension: Dimension,
    #[serde(with = "crate::serde_float")]
    pub vr: f64,
    pub vr_ci: BootstrapCi<f64>,
    pub brown_forsythe: TestResult<f64>,
    /// Brown–Forsythe p times the five structural dimensions, capped at 1.
    pub p_bonferroni: f64,
    #[serde(with = "crate::serde_float")]
    pub hi: f64,
    pub homogenized: bool,
    pub homogenized_bonferroni: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffVerdict {
    pub condition: ConditionLabel,
    pub n_baseline: usize,
    pub n_target: usize,
    pub quality: QualityGain,
    pub dimensions: Vec<DimensionTradeoff>,
    /// Dimensions with VR > 1 and Brown–Forsythe p < α.
    pub homogenized_dims: Vec<Dimension>,
    /// Quality rose with Welch p < α and at least one dimension homogenized.
    pub verdict: bool,
    /// The same rule on Bonferroni-adjusted p values.
    pub verdict_bonferroni: bool,
}

/// Quality gain and per-dimension variance compression of each target
/// against the baseline. Each target bootstraps from its own child of
/// `bootstrap.seed`.
pub fn stage1_tradeoff(
    table: &FeatureTable,
    baseline: ConditionLabel,
    targets: &[ConditionLabel],
    alpha: f64,
    bootstrap: &BootstrapConfig,
) -> Result<Vec<TradeoffVerdict>, PipelineError> {
    require_condition(table, baseline, 2)?;
    for &t in targets {
        require_condition(table, t, 2)?;
    }
    let hq = table.values(baseline, Dimension::Quality);
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        let tq = table.values(target, Dimension::Quality);
        let welch = welch_t(&tq, &hq)?;
        let d = cohens_d(&hq, &tq)?;
        let delta = mean(&tq) - mean(&hq);
        let p_q_adj = bonferroni(&[welch.p_value], Some(targets.len()))[0];
        let profile = homogenization_profile(table, baseline, target, bootstrap)?;
        let bf_p: Vec<f64> = profile.dimensions.iter().map(|d| d.brown_forsythe.p_value).collect();
        let bf_adj = bonferroni(&bf_p, None);
        let dimensions: Vec<DimensionTradeoff> = profile
            .dimensions
            .into_iter()
            .zip(bf_adj)
            .map(|(h, p_adj)| DimensionTradeoff {
                homogenized: h.vr > 1.0 && h.brown_forsythe.p_value < alpha,
                homogenized_bonferroni: h.vr > 1.0 && p_adj < alpha,
                dimension: h.dimension,
                vr: h.vr,
                vr_ci: h.vr_ci,
                brown_forsythe: h.brown_forsythe,
                p_bonferroni: p_adj,
                hi: h.hi,
            })
            .collect();
        let homogenized_dims: Vec<Dimension> = dimensions
            .iter()
            .filter(|d| d.homogenized)
            .map(|d| d.dimension)
            .collect();
        let gained = delta > 0.0;
        let verdict = gained && welch.p_value < alpha && !homogenized_dims.is_empty();
        let verdict_bonferroni =
            gained && p_q_adj < alpha && dimensions.iter().any(|d| d.homogenized_bonferroni);
        out.push(TradeoffVerdict {
            condition: target,
            n_baseline: hq.len(),
            n_target: tq.len(),
            quality: QualityGain {
                baseline_mean: mean(&hq),
                target_mean: mean(&tq),
                delta_mean: delta,
                cohens_d: d,
                welch,
                p_bonferroni: p_q_adj,
            },
            dimensions,
            homogenized_dims,
            verdict,
            verdict_bonferroni,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Homogenized,
    Diversified,
    PromptDependent,
    None,
}

impl Direction {
    pub fn key(self) -> &'static str {
        match self {
            Direction::Homogenized => "homogenized",
            Direction::Diversified => "diversified",
            Direction::PromptDependent => "prompt_dependent",
            Direction::None => "none",
        }
    }
}

/// Prompt-dependent when some HI ≥ `conflict` and another ≤ −`conflict`;
/// otherwise the sign of the mean HI if |mean| ≥ `direction`.
pub fn classify_direction(his: &[f64], conflict: f64, direction: f64) -> Direction {
    let up = his.iter().any(|&h| h >= conflict);
    let down = his.iter().any(|&h| h <= -conflict);
    if up && down {
        return Direction::PromptDependent;
    }
    let m = his.iter().sum::<f64>() / his.len().max(1) as f64;
    if m >= direction {
        Direction::Homogenized
    } else if m <= -direction {
        Direction::Diversified
    } else {
        Direction::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiRow {
    pub dimension: Dimension,
    /// One HI per target, in `HiMatrix::conditions` order.
    #[serde(with = "crate::serde_float::vec")]
    pub hi: Vec<f64>,
    pub mean_hi: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiMatrix {
    pub baseline: ConditionLabel,
    pub conditions: Vec<ConditionLabel>,
    pub rows: Vec<HiRow>,
}

impl HiMatrix {
    pub fn row(&self, dim: Dimension) -> Option<&HiRow> {
        self.rows.iter().find(|r| r.dimension == dim)
    }

    pub fn get(&self, dim: Dimension, condition: ConditionLabel) -> Option<f64> {
        let j = self.conditions.iter().position(|c| *c == condition)?;
        self.row(dim).map(|r| r.hi[j])
    }
}

/// HI of every structural dimension under every target, computed as
/// `1 − 1/VR` so it matches stage 1 exactly.
pub fn stage2_dimensional(
    table: &FeatureTable,
    baseline: ConditionLabel,
    targets: &[ConditionLabel],
    conflict_threshold: f64,
    direction_threshold: f64,
) -> Result<HiMatrix, PipelineError> {
    require_condition(table, baseline, 2)?;
    for &t in targets {
        require_condition(table, t, 2)?;
    }
    let mut rows = Vec::new();
    for dim in Dimension::STRUCTURAL {
        let h = table.values(baseline, dim);
        let his = targets
            .iter()
            .map(|&t| {
                let vr = variance_ratio(&h, &table.values(t, dim))?;
                if vr == 0.0 {
                    return Err(PipelineError::InsufficientData(format!(
                        "{} has zero variance in {}",
                        dim.key(),
                        baseline.short()
                    )));
                }
                Ok(hi_from_vr(vr))
            })
            .collect::<Result<Vec<f64>, PipelineError>>()?;
        rows.push(HiRow {
            dimension: dim,
            mean_hi: his.iter().sum::<f64>() / his.len() as f64,
            direction: classify_direction(&his, conflict_threshold, direction_threshold),
            hi: his,
        });
    }
    Ok(HiMatrix {
        baseline,
        conditions: targets.to_vec(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionConvergence {
    pub condition: ConditionLabel,
    pub n: usize,
    pub permutation_seed: u64,
    #[serde(flatten)]
    pub result: ConvergenceResult<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub standardization: StandardizationParams<f64>,
    pub conditions: Vec<ConditionConvergence>,
    /// Written to its own files rather than the summary.
    #[serde(skip)]
    pub projection: Option<Projection>,
}

/// Centroid geometry of each target relative to H and A in the
/// standardized structural space, plus the 2D projection.
pub fn stage3_convergence(
    table: &FeatureTable,
    targets: &[ConditionLabel],
    mode: StandardizeMode,
    emergence: &EmergenceConfig,
) -> Result<ConvergenceReport, PipelineError> {
    require_condition(table, ConditionLabel::HumanOnly, 2)?;
    require_condition(table, ConditionLabel::AiOnly, 2)?;
    for &t in targets {
        require_condition(table, t, 2)?;
    }
    let z = zscore_standardize(table, mode)?;
    let h = z.profiles(ConditionLabel::HumanOnly);
    let a = z.profiles(ConditionLabel::AiOnly);
    let stream = SeedStream::new(emergence.seed);
    let conditions = targets
        .iter()
        .map(|&t| {
            let aug = z.profiles(t);
            let cfg = EmergenceConfig {
                seed: stream.child(t.code()).seed(),
                ..emergence.clone()
            };
            Ok(ConditionConvergence {
                condition: t,
                n: aug.len(),
                permutation_seed: cfg.seed,
                result: convergence(&h, &a, &aug, &cfg)?,
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    let projection = match project_2d(&z) {
        Ok(p) => Some(p),
        Err(e) => {
            log::warn!("projection skipped: {e}");
            None
        }
    };
    Ok(ConvergenceReport {
        standardization: z.params,
        conditions,
        projection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationRow {
    pub dimension: Dimension,
    pub kruskal_wallis: TestResult<f64>,
    pub levene: TestResult<f64>,
    pub variance_differs: bool,
    pub mean_differs: bool,
    /// HI changes sign across prompts (see [`classify_direction`]).
    pub reversal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationReport {
    pub conditions: Vec<ConditionLabel>,
    pub rows: Vec<ModerationRow>,
}

/// Differences between the prompt conditions themselves.
pub fn stage4_moderation(
    table: &FeatureTable,
    baseline: ConditionLabel,
    targets: &[ConditionLabel],
    alpha: f64,
    conflict_threshold: f64,
    direction_threshold: f64,
) -> Result<ModerationReport, PipelineError> {
    if targets.len() < 2 {
        return Err(PipelineError::InsufficientData(
            "moderation needs at least two prompt conditions".into(),
        ));
    }
    for &t in targets {
        require_condition(table, t, 2)?;
    }
    let hi = stage2_dimensional(table, baseline, targets, conflict_threshold, direction_threshold)?;
    let mut rows = Vec::new();
    for dim in Dimension::STRUCTURAL {
        let cols: Vec<Vec<f64>> = targets.iter().map(|&t| table.values(t, dim)).collect();
        let views: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let kw = kruskal_wallis(&views)?;
        let lv = levene_mean(&views)?;
        rows.push(ModerationRow {
            dimension: dim,
            variance_differs: lv.p_value < alpha,
            mean_differs: kw.p_value < alpha,
            reversal: hi.row(dim).is_some_and(|r| r.direction == Direction::PromptDependent),
            kruskal_wallis: kw,
            levene: lv,
        });
    }
    Ok(ModerationReport {
        conditions: targets.to_vec(),
        rows,
    })
}
