use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ConditionLabel, CorpusSet};

/// Matching of human essays to their augmentations in one H+AI condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCoverage {
    pub condition: ConditionLabel,
    pub matched: usize,
    pub human_total: usize,
    /// `matched / human_total`; `None` when the condition has no records.
    pub coverage: Option<f64>,
    /// Human essays with more than one augmentation in this condition.
    pub duplicated: usize,
    pub missing_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub human_total: usize,
    pub design_counts: Vec<DesignCell>,
    pub conditions: Vec<ConditionCoverage>,
    pub complete: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignCell {
    pub condition: ConditionLabel,
    pub topic_id: u32,
    pub count: usize,
}

/// Checks that every human essay has exactly one augmentation per H+AI
/// condition.
pub fn validate_design(corpus: &CorpusSet) -> DesignReport {
    let humans: Vec<&str> = corpus
        .by_condition(ConditionLabel::HumanOnly)
        .map(|r| r.essay_id.as_str())
        .collect();
    let mut reasons = Vec::new();
    let mut conditions = Vec::new();
    let any_augmented = ConditionLabel::AUGMENTED
        .iter()
        .any(|&c| corpus.count(c) > 0);
    if !any_augmented {
        reasons.push("no augmented conditions".to_string());
    }
    if humans.is_empty() {
        reasons.push("no human-only essays".to_string());
    }

    for condition in ConditionLabel::AUGMENTED {
        let mut per_base: HashMap<&str, usize> = HashMap::new();
        for r in corpus.by_condition(condition) {
            *per_base.entry(r.base_id.as_str()).or_insert(0) += 1;
        }
        let present = corpus.count(condition) > 0;
        let missing_ids: Vec<String> = humans
            .iter()
            .filter(|h| !per_base.contains_key(*h))
            .map(|h| h.to_string())
            .collect();
        let matched = humans.len() - missing_ids.len();
        let duplicated = per_base.values().filter(|&&n| n > 1).count();
        let coverage = (present && !humans.is_empty()).then(|| matched as f64 / humans.len() as f64);
        if any_augmented {
            if !present {
                reasons.push(format!("no records for {condition}"));
            } else if !missing_ids.is_empty() {
                reasons.push(format!(
                    "{condition}: {} of {} human essays unmatched",
                    missing_ids.len(),
                    humans.len()
                ));
            }
        }
        if duplicated > 0 {
            reasons.push(format!(
                "{condition}: {duplicated} human essays augmented more than once"
            ));
        }
        conditions.push(ConditionCoverage {
            condition,
            matched,
            human_total: humans.len(),
            coverage,
            duplicated,
            missing_ids,
        });
    }

    let design_counts = corpus
        .design_counts()
        .iter()
        .map(|(&(condition, topic_id), &count)| DesignCell {
            condition,
            topic_id,
            count,
        })
        .collect();

    DesignReport {
        human_total: humans.len(),
        design_counts,
        conditions,
        complete: reasons.is_empty(),
        reasons,
    }
}

impl DesignReport {
    pub fn counts_by_condition(&self) -> BTreeMap<ConditionLabel, usize> {
        let mut out = BTreeMap::new();
        for cell in &self.design_counts {
            *out.entry(cell.condition).or_insert(0) += cell.count;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{augmented_id, EssayRecord, PromptStrategy};

    fn crossed(n: usize, skip_minimal: Option<usize>) -> CorpusSet {
        let mut records = Vec::new();
        for i in 0..n {
            let id = format!("h{i}");
            records.push(EssayRecord::original(&id, (i % 2) as u32, ConditionLabel::HumanOnly, "t").unwrap());
            for s in PromptStrategy::ALL {
                if s == PromptStrategy::Minimal && skip_minimal == Some(i) {
                    continue;
                }
                records.push(
                    EssayRecord::new(augmented_id(&id, s), &id, (i % 2) as u32, ConditionLabel::HumanPlusAi(s), "u")
                        .unwrap(),
                );
            }
        }
        CorpusSet::new(records).unwrap()
    }

    #[test]
    fn complete_crossing() {
        let r = validate_design(&crossed(20, None));
        assert!(r.complete, "{:?}", r.reasons);
        assert!(r.conditions.iter().all(|c| c.coverage == Some(1.0)));
    }

    #[test]
    fn one_missing_minimal() {
        let r = validate_design(&crossed(20, Some(7)));
        assert!(!r.complete);
        let min = &r.conditions[0];
        assert_eq!(min.coverage, Some(19.0 / 20.0));
        assert_eq!(min.missing_ids, vec!["h7".to_string()]);
    }

    #[test]
    fn only_h_and_a() {
        let c = CorpusSet::new(vec![
            EssayRecord::original("h", 0, ConditionLabel::HumanOnly, "t").unwrap(),
            EssayRecord::original("a", 0, ConditionLabel::AiOnly, "t").unwrap(),
        ])
        .unwrap();
        let r = validate_design(&c);
        assert!(!r.complete);
        assert_eq!(r.reasons, vec!["no augmented conditions".to_string()]);
        assert!(r.conditions.iter().all(|c| c.coverage.is_none()));
    }
}
