use std::marker::PhantomData;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::evalgen::DimensionScores;
use crate::{Dimension, Scalar};

pub const PROFILE_DIMS: usize = 5;

/// Marker for profiles on the original rubric scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Raw;

/// Marker for z-standardized profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Standardized;

/// Five structural scores, ordered as [`Dimension::STRUCTURAL`].
#[derive(Debug, Serialize, Deserialize)]
#[serde(transparent, bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct StructuralProfile<T, S = Raw> {
    values: [T; PROFILE_DIMS],
    #[serde(skip)]
    scale: PhantomData<S>,
}

impl<T: Clone, S> Clone for StructuralProfile<T, S> {
    fn clone(&self) -> Self {
        StructuralProfile {
            values: self.values.clone(),
            scale: PhantomData,
        }
    }
}

impl<T: Copy, S> Copy for StructuralProfile<T, S> {}

impl<T: PartialEq, S> PartialEq for StructuralProfile<T, S> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl<T: Scalar> StructuralProfile<T, Raw> {
    pub fn new(values: [T; PROFILE_DIMS]) -> Self {
        Self::with_scale(values)
    }
}

impl StructuralProfile<f64, Raw> {
    pub fn from_scores(scores: &DimensionScores) -> Self {
        Self::new(scores.structural())
    }
}

impl<T: Scalar> StructuralProfile<T, Standardized> {
    /// Wraps values that are already in standardized units.
    pub fn standardized(values: [T; PROFILE_DIMS]) -> Self {
        Self::with_scale(values)
    }
}

impl<T: Scalar, S> StructuralProfile<T, S> {
    pub(crate) fn with_scale(values: [T; PROFILE_DIMS]) -> Self {
        StructuralProfile {
            values,
            scale: PhantomData,
        }
    }

    pub fn values(&self) -> &[T; PROFILE_DIMS] {
        &self.values
    }

    pub fn get(&self, dim: Dimension) -> Option<T> {
        Dimension::STRUCTURAL
            .iter()
            .position(|d| *d == dim)
            .map(|i| self.values[i])
    }

    pub fn distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b) * (*a - *b))
            .sum::<T>()
            .sqrt()
    }
}

impl<T, S> Index<usize> for StructuralProfile<T, S> {
    type Output = T;

    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}
