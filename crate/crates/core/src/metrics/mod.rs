//! Homogenization and convergence metrics over structural profiles.
//!
//! Profiles are five-component vectors in [`Dimension::STRUCTURAL`] order;
//! Quality is never part of the structural space.
//!
//! [`Dimension::STRUCTURAL`]: crate::Dimension::STRUCTURAL

mod emergence;
mod geometry;
mod homogenization;
mod profile;
mod projection;
mod standardize;

use thiserror::Error;

use crate::stats::StatsError;

pub use emergence::{convergence, emergence_test, ConvergenceResult, EmergenceConfig, EmergenceResult};
pub use geometry::{centroid, euclidean, perpendicular_distance, replacement_ratio, rr_from_distances};
pub use homogenization::{
    dimension_homogenization, hi_from_vr, homogenization_index, homogenization_profile, variance_ratio,
    DimensionHomogenization, HomogenizationProfile,
};
pub use profile::{Raw, Standardized, StructuralProfile, PROFILE_DIMS};
pub use projection::{
    pca_2d, project_2d, ConditionProjection, Ellipse, Pca2d, ProjectedPoint, Projection,
    ELLIPSE_LEVEL,
};
pub use standardize::{
    zscore_standardize, StandardizationParams, StandardizeMode, StandardizedFeatures,
    StandardizedRow, Standardizer,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{what}: need at least {need}, got {got}")]
    TooFew {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("zero variance: {0}")]
    ZeroVariance(String),
    #[error("H and A centroids coincide; the H-A axis is undefined")]
    DegenerateAxis,
    #[error("fewer than two directions with nonzero variance")]
    RankDeficient,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
}
