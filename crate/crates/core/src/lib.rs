//! Finite extended metric and quasi-metric spaces, their inversions and
//! sphericalizations, λ-transforms, doubling constants, θ-chains and
//! cross-ratio distortion.

pub mod chains;
pub mod covering;
pub mod document;
pub mod distortion;
pub mod generators;
pub mod numeric;
pub mod oracle;
pub mod report;
pub mod space;
pub mod transforms;
pub mod verify;

pub use covering::{ball, doubling_constant, min_half_cover, CoverError, CoverMode};
pub use space::{
    ExtendedMetricSpace, FiniteSpace, PointId, QuasiMetricSpace, SpaceError, ValidationReport,
};
pub use transforms::{
    chain_metric, inversion_kernel, lambda_transform, sphericalization_kernel,
    sphericalized_metric, LambdaWeighting, TransformError,
};
