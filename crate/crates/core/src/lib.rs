mod dimension;
mod scalar;
mod serde_float;

pub mod corpus;
pub mod evalgen;
pub mod metrics;
pub mod pipeline;
pub mod stats;

pub use dimension::Dimension;
pub use scalar::Scalar;

/// Double-precision aliases for the generic result types.
pub type TestResult = stats::TestResult<f64>;
pub type BootstrapCi = stats::BootstrapCi<f64>;
pub type SampleSummary = stats::SampleSummary<f64>;
pub type ConvergenceResult = metrics::ConvergenceResult<f64>;
pub type EmergenceResult = metrics::EmergenceResult<f64>;
pub type HomogenizationProfile = metrics::HomogenizationProfile<f64>;
pub type Profile = metrics::StructuralProfile<f64>;
pub type StandardizedProfile = metrics::StructuralProfile<f64, metrics::Standardized>;
