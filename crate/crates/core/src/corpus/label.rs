use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStrategy {
    Minimal,
    Structural,
    Delegative,
}

impl PromptStrategy {
    pub const ALL: [PromptStrategy; 3] = [
        PromptStrategy::Minimal,
        PromptStrategy::Structural,
        PromptStrategy::Delegative,
    ];

    pub fn key(self) -> &'static str {
        match self {
            PromptStrategy::Minimal => "minimal",
            PromptStrategy::Structural => "structural",
            PromptStrategy::Delegative => "delegative",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            PromptStrategy::Minimal => "Minimal",
            PromptStrategy::Structural => "Structural",
            PromptStrategy::Delegative => "Delegative",
        }
    }
}

impl FromStr for PromptStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptStrategy::ALL
            .into_iter()
            .find(|p| p.key() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown prompt strategy `{s}`"))
    }
}

/// Provenance of an essay: human-only, AI-only, or a human essay augmented
/// under one prompt strategy.
///
/// Serialized as `H`, `A`, `H+AI:minimal`, `H+AI:structural`, `H+AI:delegative`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConditionLabel {
    HumanOnly,
    AiOnly,
    HumanPlusAi(PromptStrategy),
}

impl ConditionLabel {
    pub const ALL: [ConditionLabel; 5] = [
        ConditionLabel::HumanOnly,
        ConditionLabel::AiOnly,
        ConditionLabel::HumanPlusAi(PromptStrategy::Minimal),
        ConditionLabel::HumanPlusAi(PromptStrategy::Structural),
        ConditionLabel::HumanPlusAi(PromptStrategy::Delegative),
    ];

    pub const AUGMENTED: [ConditionLabel; 3] = [
        ConditionLabel::HumanPlusAi(PromptStrategy::Minimal),
        ConditionLabel::HumanPlusAi(PromptStrategy::Structural),
        ConditionLabel::HumanPlusAi(PromptStrategy::Delegative),
    ];

    pub fn strategy(self) -> Option<PromptStrategy> {
        match self {
            ConditionLabel::HumanPlusAi(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_augmented(self) -> bool {
        self.strategy().is_some()
    }

    /// Compact name for report tables: H, A, Minimal, Structural, Delegative.
    pub fn short(self) -> &'static str {
        match self {
            ConditionLabel::HumanOnly => "H",
            ConditionLabel::AiOnly => "A",
            ConditionLabel::HumanPlusAi(s) => s.title(),
        }
    }

    /// Stable small integer, used to derive per-condition random streams.
    pub fn code(self) -> u64 {
        match self {
            ConditionLabel::HumanOnly => 0,
            ConditionLabel::AiOnly => 1,
            ConditionLabel::HumanPlusAi(PromptStrategy::Minimal) => 2,
            ConditionLabel::HumanPlusAi(PromptStrategy::Structural) => 3,
            ConditionLabel::HumanPlusAi(PromptStrategy::Delegative) => 4,
        }
    }
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionLabel::HumanOnly => f.write_str("H"),
            ConditionLabel::AiOnly => f.write_str("A"),
            ConditionLabel::HumanPlusAi(s) => write!(f, "H+AI:{}", s.key()),
        }
    }
}

impl FromStr for ConditionLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "H" => Ok(ConditionLabel::HumanOnly),
            "A" => Ok(ConditionLabel::AiOnly),
            _ => s
                .strip_prefix("H+AI:")
                .and_then(|rest| rest.parse().ok())
                .map(ConditionLabel::HumanPlusAi)
                .ok_or_else(|| format!("unknown condition label `{s}`")),
        }
    }
}

impl TryFrom<String> for ConditionLabel {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ConditionLabel> for String {
    fn from(c: ConditionLabel) -> String {
        c.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_legal_labels_round_trip() {
        let names: Vec<String> = ConditionLabel::ALL.iter().map(|c| c.to_string()).collect();
        assert_eq!(
            names,
            ["H", "A", "H+AI:minimal", "H+AI:structural", "H+AI:delegative"]
        );
        for c in ConditionLabel::ALL {
            assert_eq!(c.to_string().parse::<ConditionLabel>().unwrap(), c);
        }
        assert!("H+AI".parse::<ConditionLabel>().is_err());
        assert!("H+AI:creative".parse::<ConditionLabel>().is_err());
        assert_eq!(serde_json::to_string(&ConditionLabel::AiOnly).unwrap(), "\"A\"");
    }
}
