//! Synthetic corpora with known per-condition moments, used as ground truth
//! for the variance-ratio and convergence oracles.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{augmented_id, ConditionLabel, CorpusError, CorpusSet, EssayRecord};
use crate::evalgen::{DimensionScores, FeatureRow, FeatureTable};
use crate::stats::SeedStream;
use crate::Dimension;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub mean: f64,
    pub sd: f64,
}

impl Moment {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Moment { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionMoments {
    pub argument_depth: Moment,
    pub perspective_plurality: Moment,
    pub abstract_concrete_oscillation: Moment,
    pub cohesion_architecture: Moment,
    pub structural_originality: Moment,
    pub quality: Moment,
}

impl ConditionMoments {
    /// Moments in [`Dimension::ALL`] order.
    pub const fn from_array(m: [Moment; 6]) -> Self {
        ConditionMoments {
            argument_depth: m[0],
            perspective_plurality: m[1],
            abstract_concrete_oscillation: m[2],
            cohesion_architecture: m[3],
            structural_originality: m[4],
            quality: m[5],
        }
    }

    pub fn get(&self, dim: Dimension) -> Moment {
        match dim {
            Dimension::ArgumentDepth => self.argument_depth,
            Dimension::PerspectivePlurality => self.perspective_plurality,
            Dimension::AbstractConcreteOscillation => self.abstract_concrete_oscillation,
            Dimension::CohesionArchitecture => self.cohesion_architecture,
            Dimension::StructuralOriginality => self.structural_originality,
            Dimension::Quality => self.quality,
        }
    }

    pub fn get_mut(&mut self, dim: Dimension) -> &mut Moment {
        match dim {
            Dimension::ArgumentDepth => &mut self.argument_depth,
            Dimension::PerspectivePlurality => &mut self.perspective_plurality,
            Dimension::AbstractConcreteOscillation => &mut self.abstract_concrete_oscillation,
            Dimension::CohesionArchitecture => &mut self.cohesion_architecture,
            Dimension::StructuralOriginality => &mut self.structural_originality,
            Dimension::Quality => &mut self.quality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicOverride {
    pub topic_id: u32,
    pub conditions: BTreeMap<ConditionLabel, ConditionMoments>,
}

/// Generator description: independent normals per (condition, dimension),
/// clipped to rubric bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Essays per condition.
    pub n: usize,
    /// Topic proportions; topic ids are the indices. Defaults to one topic.
    #[serde(default = "one_topic")]
    pub topic_mixture: Vec<f64>,
    pub conditions: BTreeMap<ConditionLabel, ConditionMoments>,
    #[serde(default)]
    pub topic_overrides: Vec<TopicOverride>,
    /// Clip scores to the rubric bounds. Off only for oracle checks that
    /// need the exact normal moments.
    #[serde(default = "yes")]
    pub clip: bool,
}

fn yes() -> bool {
    true
}

fn one_topic() -> Vec<f64> {
    vec![1.0]
}

const fn m(mean: f64, sd: f64) -> Moment {
    Moment::new(mean, sd)
}

/// Per-condition descriptive moments of the reference study, in
/// [`ConditionLabel::ALL`] order.
pub const REFERENCE_MOMENTS: [ConditionMoments; 5] = [
    ConditionMoments::from_array([m(2.13, 0.27), m(1.62, 0.51), m(2.84, 0.39), m(2.64, 0.47), m(1.51, 0.49), m(2.69, 0.47)]),
    ConditionMoments::from_array([m(3.37, 0.35), m(2.51, 0.58), m(3.76, 0.35), m(4.11, 0.30), m(2.01, 0.11), m(4.34, 0.41)]),
    ConditionMoments::from_array([m(3.04, 0.20), m(1.97, 0.58), m(3.37, 0.45), m(4.09, 0.22), m(1.74, 0.39), m(4.55, 0.44)]),
    ConditionMoments::from_array([m(3.36, 0.37), m(3.43, 0.52), m(3.53, 0.46), m(3.99, 0.26), m(2.28, 0.41), m(4.23, 0.35)]),
    ConditionMoments::from_array([m(3.05, 0.19), m(2.07, 0.62), m(3.37, 0.44), m(4.15, 0.26), m(1.87, 0.34), m(4.74, 0.38)]),
];

impl SyntheticSpec {
    /// Five conditions at the reference moments, 1,375 essays each, split
    /// 707/668 across two topics.
    pub fn reference(seed: u64) -> Self {
        SyntheticSpec {
            seed,
            n: 1375,
            topic_mixture: vec![707.0, 668.0],
            conditions: ConditionLabel::ALL
                .into_iter()
                .zip(REFERENCE_MOMENTS)
                .collect(),
            topic_overrides: Vec::new(),
            clip: true,
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: String| Err(CorpusError::InvalidSpec(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.conditions.is_empty() {
            return bad("no conditions".into());
        }
        if self.topic_mixture.is_empty()
            || self.topic_mixture.iter().any(|p| !(p.is_finite() && *p >= 0.0))
            || self.topic_mixture.iter().sum::<f64>() <= 0.0
        {
            return bad("topic_mixture must be nonnegative with a positive sum".into());
        }
        if self.conditions.keys().any(|c| c.is_augmented())
            && !self.conditions.contains_key(&ConditionLabel::HumanOnly)
        {
            return bad("augmented conditions need an H condition to pair with".into());
        }
        let all_moments = self.conditions.iter().map(|(c, m)| (None, c, m)).chain(
            self.topic_overrides
                .iter()
                .flat_map(|o| o.conditions.iter().map(move |(c, m)| (Some(o.topic_id), c, m))),
        );
        for (topic, condition, moments) in all_moments {
            for dim in Dimension::ALL {
                let mo = moments.get(dim);
                if !(mo.sd > 0.0 && mo.sd.is_finite() && mo.mean.is_finite()) {
                    let at = topic.map(|t| format!(" (topic {t})")).unwrap_or_default();
                    return bad(format!(
                        "{condition}/{dim}{at}: standard deviation must be > 0, got {}",
                        mo.sd
                    ));
                }
            }
        }
        Ok(())
    }

    fn moments(&self, condition: ConditionLabel, topic: u32) -> &ConditionMoments {
        self.topic_overrides
            .iter()
            .find(|o| o.topic_id == topic)
            .and_then(|o| o.conditions.get(&condition))
            .unwrap_or(&self.conditions[&condition])
    }

    /// Topic of each essay index under largest-remainder allocation.
    fn topic_plan(&self) -> Vec<u32> {
        let total: f64 = self.topic_mixture.iter().sum();
        let quotas: Vec<f64> = self
            .topic_mixture
            .iter()
            .map(|p| p / total * self.n as f64)
            .collect();
        let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = quotas[a] - quotas[a].floor();
            let fb = quotas[b] - quotas[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        let mut remaining = self.n - counts.iter().sum::<usize>();
        for &i in order.iter().cycle() {
            if remaining == 0 {
                break;
            }
            counts[i] += 1;
            remaining -= 1;
        }
        counts
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| std::iter::repeat_n(t as u32, c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipCount {
    pub condition: ConditionLabel,
    pub dimension: Dimension,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub corpus: CorpusSet,
    pub features: FeatureTable,
    /// Nonzero clip counts per (condition, dimension).
    pub clipping: Vec<ClipCount>,
    /// Fewer essays per condition than the inferential tests are meant for.
    pub low_n: bool,
}

/// Below this many essays per condition the downstream tests still run but
/// results are flagged.
pub const LOW_N: usize = 30;

pub fn synthesize_corpus(spec: &SyntheticSpec) -> Result<Synthesized, CorpusError> {
    spec.validate()?;
    let plan = spec.topic_plan();
    let stream = SeedStream::new(spec.seed);
    let mut records = Vec::with_capacity(spec.n * spec.conditions.len());
    let mut rows = Vec::with_capacity(records.capacity());
    let mut clipping = BTreeMap::new();

    for &condition in spec.conditions.keys() {
        let cond_stream = stream.child(condition.code());
        for (i, &topic) in plan.iter().enumerate() {
            let (essay_id, base_id) = match condition {
                ConditionLabel::HumanOnly => (human_id(i), human_id(i)),
                ConditionLabel::AiOnly => (format!("A-{:05}", i + 1), format!("A-{:05}", i + 1)),
                ConditionLabel::HumanPlusAi(s) => (augmented_id(&human_id(i), s), human_id(i)),
            };
            let moments = spec.moments(condition, topic);
            let mut rng = cond_stream.rng(i as u64);
            let mut scores = DimensionScores::default();
            for dim in Dimension::ALL {
                let mo = moments.get(dim);
                let z: f64 = StandardNormal.sample(&mut rng);
                let raw = mo.mean + mo.sd * z;
                let (lo, hi) = dim.bounds();
                let v = if spec.clip { raw.clamp(lo, hi) } else { raw };
                if v != raw {
                    *clipping.entry((condition, dim)).or_insert(0usize) += 1;
                }
                scores.set(dim, v);
            }
            let text = format!("Synthetic {condition} essay {} on topic {topic}.", i + 1);
            records.push(EssayRecord::new(&essay_id, &base_id, topic, condition, text)?);
            rows.push(FeatureRow {
                essay_id,
                base_id,
                condition,
                topic_id: topic,
                mean: scores,
                cv: DimensionScores::zeros(),
                run_count: 1,
            });
        }
    }

    Ok(Synthesized {
        corpus: CorpusSet::new(records)?,
        features: FeatureTable::new(rows),
        clipping: clipping
            .into_iter()
            .map(|((condition, dimension), count)| ClipCount {
                condition,
                dimension,
                count,
            })
            .collect(),
        low_n: spec.n < LOW_N,
    })
}

fn human_id(i: usize) -> String {
    format!("H-{:05}", i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::variance;

    fn two_condition_spec(h_sd: f64, min_sd: f64, n: usize, seed: u64) -> SyntheticSpec {
        let base = ConditionMoments::from_array([m(3.0, 0.3); 6]);
        let mut min = base;
        let mut h = base;
        h.cohesion_architecture = m(3.0, h_sd);
        min.cohesion_architecture = m(3.0, min_sd);
        SyntheticSpec {
            seed,
            n,
            topic_mixture: vec![1.0],
            conditions: [
                (ConditionLabel::HumanOnly, h),
                (ConditionLabel::HumanPlusAi(crate::corpus::PromptStrategy::Minimal), min),
            ]
            .into_iter()
            .collect(),
            topic_overrides: vec![],
            clip: true,
        }
    }

    fn cohesion(s: &Synthesized, c: ConditionLabel) -> Vec<f64> {
        s.features
            .rows()
            .iter()
            .filter(|r| r.condition == c)
            .map(|r| r.mean.cohesion_architecture)
            .collect()
    }

    #[test]
    fn variance_ratio_four_is_recovered() {
        let s = synthesize_corpus(&two_condition_spec(0.4, 0.2, 1375, 11)).unwrap();
        let min = ConditionLabel::HumanPlusAi(crate::corpus::PromptStrategy::Minimal);
        let vr = variance(&cohesion(&s, ConditionLabel::HumanOnly)) / variance(&cohesion(&s, min));
        assert!((3.5..=4.5).contains(&vr), "vr = {vr}");
        assert!(s.clipping.is_empty());
    }

    #[test]
    fn identical_conditions_give_unit_ratio() {
        let s = synthesize_corpus(&two_condition_spec(0.3, 0.3, 1375, 5)).unwrap();
        let min = ConditionLabel::HumanPlusAi(crate::corpus::PromptStrategy::Minimal);
        let vr = variance(&cohesion(&s, ConditionLabel::HumanOnly)) / variance(&cohesion(&s, min));
        assert!((0.85..=1.18).contains(&vr), "vr = {vr}");
    }

    #[test]
    fn tiny_n_is_flagged() {
        let s = synthesize_corpus(&two_condition_spec(0.3, 0.3, 2, 5)).unwrap();
        assert!(s.low_n);
        assert_eq!(s.corpus.len(), 4);
    }

    #[test]
    fn reference_topic_split_and_clipping() {
        let s = synthesize_corpus(&SyntheticSpec::reference(1)).unwrap();
        assert_eq!(s.corpus.len(), 6875);
        let counts = s.corpus.design_counts();
        assert_eq!(counts[&(ConditionLabel::HumanOnly, 0)], 707);
        assert_eq!(counts[&(ConditionLabel::HumanOnly, 1)], 668);
        // H structural originality sits near the floor of the scale
        assert!(s
            .clipping
            .iter()
            .any(|c| c.condition == ConditionLabel::HumanOnly
                && c.dimension == Dimension::StructuralOriginality
                && c.count > 100));
    }

    #[test]
    fn zero_sd_is_rejected() {
        let mut spec = two_condition_spec(0.3, 0.3, 10, 1);
        spec.conditions
            .get_mut(&ConditionLabel::HumanOnly)
            .unwrap()
            .quality
            .sd = 0.0;
        assert!(matches!(synthesize_corpus(&spec), Err(CorpusError::InvalidSpec(_))));
    }
}
