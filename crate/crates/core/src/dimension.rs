use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the six rubric dimensions scored by the evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    ArgumentDepth,
    PerspectivePlurality,
    AbstractConcreteOscillation,
    CohesionArchitecture,
    StructuralOriginality,
    Quality,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::ArgumentDepth,
        Dimension::PerspectivePlurality,
        Dimension::AbstractConcreteOscillation,
        Dimension::CohesionArchitecture,
        Dimension::StructuralOriginality,
        Dimension::Quality,
    ];

    /// The five structural dimensions, in profile order. Quality is excluded.
    pub const STRUCTURAL: [Dimension; 5] = [
        Dimension::ArgumentDepth,
        Dimension::PerspectivePlurality,
        Dimension::AbstractConcreteOscillation,
        Dimension::CohesionArchitecture,
        Dimension::StructuralOriginality,
    ];

    /// JSON key used in evaluator responses and feature files.
    pub fn key(self) -> &'static str {
        match self {
            Dimension::ArgumentDepth => "argument_depth",
            Dimension::PerspectivePlurality => "perspective_plurality",
            Dimension::AbstractConcreteOscillation => "abstract_concrete_oscillation",
            Dimension::CohesionArchitecture => "cohesion_architecture",
            Dimension::StructuralOriginality => "structural_originality",
            Dimension::Quality => "quality",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dimension::ArgumentDepth => "Argument Depth",
            Dimension::PerspectivePlurality => "Perspective Plurality",
            Dimension::AbstractConcreteOscillation => "Abstract-Concrete Oscillation",
            Dimension::CohesionArchitecture => "Cohesion Architecture",
            Dimension::StructuralOriginality => "Structural Originality",
            Dimension::Quality => "Quality",
        }
    }

    /// Inclusive rubric bounds.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            Dimension::Quality => (1.0, 6.0),
            _ => (1.0, 5.0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.key() == s)
            .ok_or_else(|| format!("unknown dimension `{s}`"))
    }
}
