use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::ConditionLabel;
use crate::evalgen::{FeatureRow, FeatureTable};
use crate::Dimension;

/// Baseline rows with their target partner (same base identity), plus the
/// number of rows on either side without one.
fn paired<'a>(
    table: &'a FeatureTable,
    baseline: ConditionLabel,
    target: ConditionLabel,
) -> (Vec<(&'a FeatureRow, &'a FeatureRow)>, usize) {
    let targets: BTreeMap<&str, &FeatureRow> = table
        .by_condition(target)
        .map(|r| (r.base_id.as_str(), r))
        .collect();
    let mut pairs = Vec::new();
    let mut unpaired = 0;
    let mut used = 0;
    for b in table.by_condition(baseline) {
        match targets.get(b.essay_id.as_str()) {
            Some(t) => {
                pairs.push((b, *t));
                used += 1;
            }
            None => unpaired += 1,
        }
    }
    (pairs, unpaired + targets.len() - used)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TercileRow {
    pub tercile: String,
    pub n: usize,
    pub baseline_mean: f64,
    pub post_mean: f64,
    pub change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TercileReport {
    pub dimension: Dimension,
    pub baseline: ConditionLabel,
    pub target: ConditionLabel,
    pub n_paired: usize,
    pub n_unpaired: usize,
    pub terciles: Vec<TercileRow>,
    /// Highest minus lowest tercile mean.
    pub spread_before: f64,
    pub spread_after: f64,
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn spread(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min)
}

/// Splits paired baseline essays into thirds by their `dimension` score
/// (ties ordered by essay id) and follows each third to the target.
pub fn tercile_convergence(
    table: &FeatureTable,
    dimension: Dimension,
    baseline: ConditionLabel,
    target: ConditionLabel,
) -> Result<TercileReport, PipelineError> {
    let (mut pairs, n_unpaired) = paired(table, baseline, target);
    if pairs.len() < 3 {
        return Err(PipelineError::InsufficientData(format!(
            "tercile analysis of {} needs 3 paired essays, found {}",
            target.short(),
            pairs.len()
        )));
    }
    pairs.sort_by(|a, b| {
        a.0.mean
            .get(dimension)
            .total_cmp(&b.0.mean.get(dimension))
            .then_with(|| a.0.essay_id.cmp(&b.0.essay_id))
    });
    let n = pairs.len();
    let terciles: Vec<TercileRow> = ["low", "middle", "high"]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let part = &pairs[k * n / 3..(k + 1) * n / 3];
            let before = mean_of(part.iter().map(|p| p.0.mean.get(dimension)));
            let after = mean_of(part.iter().map(|p| p.1.mean.get(dimension)));
            TercileRow {
                tercile: name.to_string(),
                n: part.len(),
                baseline_mean: before,
                post_mean: after,
                change: after - before,
            }
        })
        .collect();
    Ok(TercileReport {
        dimension,
        baseline,
        target,
        n_paired: n,
        n_unpaired,
        spread_before: spread(terciles.iter().map(|t| t.baseline_mean)),
        spread_after: spread(terciles.iter().map(|t| t.post_mean)),
        terciles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupChange {
    pub n: usize,
    pub mean_before: Option<f64>,
    pub mean_after: Option<f64>,
    pub change: Option<f64>,
}

impl GroupChange {
    fn of(pairs: &[&(&FeatureRow, &FeatureRow)], dim: Dimension) -> GroupChange {
        if pairs.is_empty() {
            return GroupChange {
                n: 0,
                mean_before: None,
                mean_after: None,
                change: None,
            };
        }
        let before = mean_of(pairs.iter().map(|p| p.0.mean.get(dim)));
        let after = mean_of(pairs.iter().map(|p| p.1.mean.get(dim)));
        GroupChange {
            n: pairs.len(),
            mean_before: Some(before),
            mean_after: Some(after),
            change: Some(after - before),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub dimension: Dimension,
    pub baseline: ConditionLabel,
    pub target: ConditionLabel,
    pub low_cut: f64,
    pub high_cut: f64,
    /// Baseline score ≥ `high_cut`.
    pub high: GroupChange,
    /// Baseline score ≤ `low_cut`.
    pub low: GroupChange,
    pub n_unpaired: usize,
}

/// Follows the paired essays scoring at the extremes of the baseline.
pub fn threshold_convergence(
    table: &FeatureTable,
    dimension: Dimension,
    low_cut: f64,
    high_cut: f64,
    baseline: ConditionLabel,
    target: ConditionLabel,
) -> Result<ThresholdReport, PipelineError> {
    if low_cut > high_cut {
        return Err(PipelineError::InvalidConfig(format!(
            "low cut {low_cut} exceeds high cut {high_cut}"
        )));
    }
    let (pairs, n_unpaired) = paired(table, baseline, target);
    let high: Vec<_> = pairs.iter().filter(|p| p.0.mean.get(dimension) >= high_cut).collect();
    let low: Vec<_> = pairs.iter().filter(|p| p.0.mean.get(dimension) <= low_cut).collect();
    Ok(ThresholdReport {
        dimension,
        baseline,
        target,
        low_cut,
        high_cut,
        high: GroupChange::of(&high, dimension),
        low: GroupChange::of(&low, dimension),
        n_unpaired,
    })
}
