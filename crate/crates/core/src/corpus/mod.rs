//! Essay records, condition labels, corpus ingestion and the crossed-design
//! bookkeeping that pairs every augmented essay with its human original.

mod design;
mod io;
mod label;
mod synth;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use design::{validate_design, ConditionCoverage, DesignReport};
pub use io::{load_corpus, load_records, write_corpus, write_records, CorpusFormat};
pub use label::{ConditionLabel, PromptStrategy};
pub use synth::{
    synthesize_corpus, ClipCount, ConditionMoments, Moment, SyntheticSpec, Synthesized, TopicOverride,
    LOW_N,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: unknown condition label `{label}`")]
    UnknownCondition { line: usize, label: String },
    #[error("duplicate essay_id `{0}`")]
    DuplicateId(String),
    #[error("essay `{essay_id}` references base_id `{base_id}`, which is not a human-only essay")]
    DanglingBase { essay_id: String, base_id: String },
    #[error("essay `{0}`: base_id must equal essay_id for H and A records")]
    BaseMismatch(String),
    #[error("essay `{0}`: text is empty")]
    EmptyText(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One essay in one condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EssayRecord {
    pub essay_id: String,
    /// Identity of the originating human essay; equals `essay_id` for H and A.
    pub base_id: String,
    pub topic_id: u32,
    pub condition: ConditionLabel,
    pub text: String,
    /// Unicode code points in `text`.
    pub char_count: usize,
}

impl EssayRecord {
    pub fn new(
        essay_id: impl Into<String>,
        base_id: impl Into<String>,
        topic_id: u32,
        condition: ConditionLabel,
        text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let essay_id = essay_id.into();
        let text = text.into();
        if text.is_empty() {
            return Err(CorpusError::EmptyText(essay_id));
        }
        Ok(EssayRecord {
            char_count: text.chars().count(),
            base_id: base_id.into(),
            essay_id,
            topic_id,
            condition,
            text,
        })
    }

    /// Record for an H or A essay, whose base identity is itself.
    pub fn original(
        essay_id: impl Into<String>,
        topic_id: u32,
        condition: ConditionLabel,
        text: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let id = essay_id.into();
        Self::new(id.clone(), id, topic_id, condition, text)
    }
}

/// Identifier given to the augmentation of `base_id` under `strategy`.
pub fn augmented_id(base_id: &str, strategy: PromptStrategy) -> String {
    format!("{base_id}:{}", strategy.key())
}

/// Immutable, validated collection of essays.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSet {
    records: Vec<EssayRecord>,
    design_counts: BTreeMap<(ConditionLabel, u32), usize>,
    index: HashMap<String, usize>,
}

impl CorpusSet {
    /// Validates id uniqueness and base references. An empty record list is
    /// a valid (empty) corpus.
    pub fn new(records: Vec<EssayRecord>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.text.is_empty() {
                return Err(CorpusError::EmptyText(r.essay_id.clone()));
            }
            if index.insert(r.essay_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(r.essay_id.clone()));
            }
        }
        let mut design_counts = BTreeMap::new();
        for r in &records {
            if r.condition.is_augmented() {
                let base_ok = index
                    .get(&r.base_id)
                    .is_some_and(|&i| records[i].condition == ConditionLabel::HumanOnly);
                if !base_ok {
                    return Err(CorpusError::DanglingBase {
                        essay_id: r.essay_id.clone(),
                        base_id: r.base_id.clone(),
                    });
                }
            } else if r.base_id != r.essay_id {
                return Err(CorpusError::BaseMismatch(r.essay_id.clone()));
            }
            *design_counts.entry((r.condition, r.topic_id)).or_insert(0) += 1;
        }
        Ok(CorpusSet {
            records,
            design_counts,
            index,
        })
    }

    pub fn records(&self) -> &[EssayRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, essay_id: &str) -> Option<&EssayRecord> {
        self.index.get(essay_id).map(|&i| &self.records[i])
    }

    pub fn design_counts(&self) -> &BTreeMap<(ConditionLabel, u32), usize> {
        &self.design_counts
    }

    pub fn count(&self, condition: ConditionLabel) -> usize {
        self.design_counts
            .iter()
            .filter(|((c, _), _)| *c == condition)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn by_condition(&self, condition: ConditionLabel) -> impl Iterator<Item = &EssayRecord> {
        self.records.iter().filter(move |r| r.condition == condition)
    }

    pub fn topics(&self) -> Vec<u32> {
        let mut t: Vec<u32> = self.records.iter().map(|r| r.topic_id).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    pub fn into_records(self) -> Vec<EssayRecord> {
        self.records
    }
}

/// Splits the corpus by topic. Augmented records stay with their own topic
/// label, which matches their base essay's topic in a well-formed corpus.
pub fn partition_by_topic(corpus: &CorpusSet) -> BTreeMap<u32, CorpusSet> {
    let mut parts: BTreeMap<u32, Vec<EssayRecord>> = BTreeMap::new();
    for r in corpus.records() {
        parts.entry(r.topic_id).or_default().push(r.clone());
    }
    parts
        .into_iter()
        .map(|(topic, records)| {
            let set = CorpusSet::new(records)
                .expect("augmented records share their base essay's topic");
            (topic, set)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(id: &str, topic: u32) -> EssayRecord {
        EssayRecord::original(id, topic, ConditionLabel::HumanOnly, "text").unwrap()
    }

    #[test]
    fn char_count_uses_code_points() {
        let r = EssayRecord::original("x", 0, ConditionLabel::AiOnly, "héllo ✓").unwrap();
        assert_eq!(r.char_count, 7);
        assert!(r.text.len() > 7);
    }

    #[test]
    fn rejects_duplicates_and_dangling() {
        assert!(matches!(
            CorpusSet::new(vec![h("a", 0), h("a", 0)]),
            Err(CorpusError::DuplicateId(id)) if id == "a"
        ));
        let aug = EssayRecord::new(
            "z:minimal",
            "z",
            0,
            ConditionLabel::HumanPlusAi(PromptStrategy::Minimal),
            "t",
        )
        .unwrap();
        let err = CorpusSet::new(vec![h("a", 0), aug]).unwrap_err();
        assert!(err.to_string().contains("`z`"));
    }

    #[test]
    fn partition_sizes_sum() {
        let c = CorpusSet::new(vec![h("a", 0), h("b", 1), h("c", 1)]).unwrap();
        let parts = partition_by_topic(&c);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&1].len(), 2);
        assert_eq!(parts.values().map(CorpusSet::len).sum::<usize>(), 3);

        let single = CorpusSet::new(vec![h("a", 3)]).unwrap();
        assert_eq!(partition_by_topic(&single).len(), 1);
        assert!(partition_by_topic(&CorpusSet::new(vec![]).unwrap()).is_empty());
    }
}
