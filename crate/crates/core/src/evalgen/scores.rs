use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::ResponseError;
use crate::Dimension;

/// The six rubric scores of one evaluation (or their per-essay aggregate).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionScores {
    pub argument_depth: f64,
    pub perspective_plurality: f64,
    pub abstract_concrete_oscillation: f64,
    pub cohesion_architecture: f64,
    pub structural_originality: f64,
    pub quality: f64,
}

impl DimensionScores {
    pub fn zeros() -> Self {
        Self::default()
    }

    /// Values in [`Dimension::ALL`] order.
    pub fn from_array(v: [f64; 6]) -> Self {
        DimensionScores {
            argument_depth: v[0],
            perspective_plurality: v[1],
            abstract_concrete_oscillation: v[2],
            cohesion_architecture: v[3],
            structural_originality: v[4],
            quality: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        Dimension::ALL.map(|d| self.get(d))
    }

    pub fn structural(&self) -> [f64; 5] {
        Dimension::STRUCTURAL.map(|d| self.get(d))
    }

    pub fn get(&self, dim: Dimension) -> f64 {
        match dim {
            Dimension::ArgumentDepth => self.argument_depth,
            Dimension::PerspectivePlurality => self.perspective_plurality,
            Dimension::AbstractConcreteOscillation => self.abstract_concrete_oscillation,
            Dimension::CohesionArchitecture => self.cohesion_architecture,
            Dimension::StructuralOriginality => self.structural_originality,
            Dimension::Quality => self.quality,
        }
    }

    pub fn set(&mut self, dim: Dimension, value: f64) {
        let slot = match dim {
            Dimension::ArgumentDepth => &mut self.argument_depth,
            Dimension::PerspectivePlurality => &mut self.perspective_plurality,
            Dimension::AbstractConcreteOscillation => &mut self.abstract_concrete_oscillation,
            Dimension::CohesionArchitecture => &mut self.cohesion_architecture,
            Dimension::StructuralOriginality => &mut self.structural_originality,
            Dimension::Quality => &mut self.quality,
        };
        *slot = value;
    }

    /// First dimension whose value lies outside its rubric bounds.
    pub fn out_of_bounds(&self) -> Option<(Dimension, f64)> {
        Dimension::ALL.into_iter().find_map(|d| {
            let v = self.get(d);
            let (lo, hi) = d.bounds();
            (!(lo..=hi).contains(&v)).then_some((d, v))
        })
    }
}

/// Parses an evaluator response into scores.
///
/// Accepts a bare JSON object, optionally wrapped in a Markdown code fence.
/// Every score key must be present, numeric and within its bounds.
pub fn parse_scores(raw: &str) -> Result<DimensionScores, ResponseError> {
    let body = strip_fence(raw.trim());
    let start = body.find('{');
    let end = body.rfind('}');
    let object = match (start, end) {
        (Some(s), Some(e)) if s < e => &body[s..=e],
        _ => return Err(ResponseError::Unparsable("no JSON object in response".into())),
    };
    let value: Value =
        serde_json::from_str(object).map_err(|e| ResponseError::Unparsable(e.to_string()))?;
    let map = value
        .as_object()
        .ok_or_else(|| ResponseError::Unparsable("response is not a JSON object".into()))?;
    let mut scores = DimensionScores::zeros();
    for dim in Dimension::ALL {
        let v = map
            .get(dim.key())
            .ok_or(ResponseError::MissingKey(dim.key()))?;
        let x = v
            .as_f64()
            .or_else(|| v.as_str().and_then(|s| s.trim().parse().ok()))
            .ok_or_else(|| ResponseError::NotNumeric {
                key: dim.key(),
                value: v.to_string(),
            })?;
        let (lo, hi) = dim.bounds();
        if !(lo..=hi).contains(&x) {
            return Err(ResponseError::OutOfRange {
                key: dim.key(),
                value: x,
                min: lo,
                max: hi,
            });
        }
        scores.set(dim, x);
    }
    Ok(scores)
}

fn strip_fence(s: &str) -> &str {
    let Some(rest) = s.strip_prefix("```") else {
        return s;
    };
    let rest = rest.split_once('\n').map_or(rest, |(_, body)| body);
    rest.trim_end().strip_suffix("```").unwrap_or(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    const OK: &str = r#"{"argument_depth": 3, "perspective_plurality": 2, "abstract_concrete_oscillation": 3,
        "cohesion_architecture": 4, "structural_originality": 2, "quality": 4}"#;

    #[test]
    fn passthrough() {
        let s = parse_scores(OK).unwrap();
        assert_eq!(s.to_array(), [3.0, 2.0, 3.0, 4.0, 2.0, 4.0]);
        let fenced = format!("```json\n{OK}\n```");
        assert_eq!(parse_scores(&fenced).unwrap(), s);
    }

    #[test]
    fn out_of_range() {
        let bad = OK.replace("\"cohesion_architecture\": 4", "\"cohesion_architecture\": 7");
        assert_eq!(
            parse_scores(&bad),
            Err(ResponseError::OutOfRange {
                key: "cohesion_architecture",
                value: 7.0,
                min: 1.0,
                max: 5.0
            })
        );
        // quality tops out at 6
        let six = OK.replace("\"quality\": 4", "\"quality\": 6");
        assert_eq!(parse_scores(&six).unwrap().quality, 6.0);
    }

    #[test]
    fn missing_key_is_named() {
        let bad = OK.replace(", \"quality\": 4", "");
        let err = parse_scores(&bad).unwrap_err();
        assert_eq!(err, ResponseError::MissingKey("quality"));
        assert!(err.to_string().contains("quality"));
    }

    #[test]
    fn garbage() {
        assert!(matches!(parse_scores("I think 3/5"), Err(ResponseError::Unparsable(_))));
        let s = OK.replace("\"quality\": 4", "\"quality\": \"high\"");
        assert!(matches!(parse_scores(&s), Err(ResponseError::NotNumeric { .. })));
    }
}
