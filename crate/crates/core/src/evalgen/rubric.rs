//! Evaluation rubric and the single-request scoring prompt built from it.
//!
//! Only the two end anchors of most scales are fixed by the rubric source;
//! the intermediate anchor texts here are interpolations.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::Dimension;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAnchor {
    pub point: u8,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionDescriptor {
    pub dimension: Dimension,
    pub name: String,
    pub min: u8,
    pub max: u8,
    pub definition: String,
    pub anchors: Vec<ScaleAnchor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorRubric {
    pub dimensions: Vec<DimensionDescriptor>,
}

pub const EVALUATOR_SYSTEM_PROMPT: &str = "You are an expert writing assessor who rates the \
structural features of student essays against an anchored rubric. You respond with JSON only.";

fn descriptor(dimension: Dimension, definition: &str, anchors: &[&str]) -> DimensionDescriptor {
    let (min, _) = dimension.bounds();
    DimensionDescriptor {
        dimension,
        name: dimension.title().to_string(),
        min: min as u8,
        max: dimension.bounds().1 as u8,
        definition: definition.to_string(),
        anchors: anchors
            .iter()
            .enumerate()
            .map(|(i, d)| ScaleAnchor {
                point: min as u8 + i as u8,
                description: d.to_string(),
            })
            .collect(),
    }
}

impl Default for EvaluatorRubric {
    fn default() -> Self {
        EvaluatorRubric {
            dimensions: vec![
                descriptor(
                    Dimension::ArgumentDepth,
                    "Number of inferential layers between claims and evidence.",
                    &[
                        "flat assertions without support",
                        "claims with a single, loosely connected reason",
                        "claims supported by evidence with one explicit inferential step",
                        "several linked inferential steps between claims and evidence",
                        "deep inferential chains",
                    ],
                ),
                descriptor(
                    Dimension::PerspectivePlurality,
                    "Number and integration quality of distinct viewpoints.",
                    &[
                        "single perspective",
                        "a second viewpoint is mentioned but not engaged",
                        "two or more viewpoints are described side by side",
                        "multiple viewpoints are compared and weighed",
                        "multiple perspectives with synthesis and evaluation",
                    ],
                ),
                descriptor(
                    Dimension::AbstractConcreteOscillation,
                    "Frequency and purposefulness of transitions between abstract claims and concrete examples.",
                    &[
                        "stays at one level of abstraction throughout",
                        "rare transitions between claims and examples",
                        "occasional transitions that are only partly purposeful",
                        "regular, mostly purposeful movement between claims and examples",
                        "frequent, purposeful oscillation between abstract claims and concrete examples",
                    ],
                ),
                descriptor(
                    Dimension::CohesionArchitecture,
                    "Quality of logical connections between and within paragraphs.",
                    &[
                        "fragmented",
                        "sparse connectives; paragraphs loosely related",
                        "basic connectives with a recognizable progression",
                        "consistent logical links within and across paragraphs",
                        "dense logical connectives with clear progression",
                    ],
                ),
                descriptor(
                    Dimension::StructuralOriginality,
                    "Degree of deviation from standard organizational templates.",
                    &[
                        "follows a standard template exactly",
                        "a standard template with minor variation",
                        "noticeable departures from the standard template",
                        "a largely individual organization",
                        "a highly original organization with no standard template",
                    ],
                ),
                descriptor(
                    Dimension::Quality,
                    "Overall essay quality.",
                    &["very poor", "poor", "fair", "good", "very good", "excellent"],
                ),
            ],
        }
    }
}

impl EvaluatorRubric {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.dimensions.len() != 6 {
            return Err(EvalError::Rubric(format!(
                "expected six dimensions, found {}",
                self.dimensions.len()
            )));
        }
        for dim in Dimension::ALL {
            let d = self
                .dimensions
                .iter()
                .find(|d| d.dimension == dim)
                .ok_or_else(|| EvalError::Rubric(format!("missing dimension {dim}")))?;
            let (lo, hi) = dim.bounds();
            if (d.min as f64, d.max as f64) != (lo, hi) {
                return Err(EvalError::Rubric(format!(
                    "{dim}: scale {}-{} does not match {lo}-{hi}",
                    d.min, d.max
                )));
            }
        }
        Ok(())
    }

    /// User prompt asking for all six scores of `essay` in one JSON object.
    pub fn render_prompt(&self, essay: &str) -> String {
        let mut out = String::from(
            "Evaluate the essay below on each of the following six dimensions, using the anchored scale for each.\n\n",
        );
        for d in &self.dimensions {
            out.push_str(&format!(
                "{} (`{}`, {}-{}): {}\n",
                d.name,
                d.dimension.key(),
                d.min,
                d.max,
                d.definition
            ));
            for a in &d.anchors {
                out.push_str(&format!("  {} = {}\n", a.point, a.description));
            }
            out.push('\n');
        }
        let keys: Vec<String> = self
            .dimensions
            .iter()
            .map(|d| format!("\"{}\"", d.dimension.key()))
            .collect();
        out.push_str(&format!(
            "Return only a valid JSON object with exactly these numeric keys: {}.\n\nEssay:\n{essay}\n",
            keys.join(", ")
        ));
        out
    }
}
