//! ε-complexity of continuous functions.
//!
//! The ε-complexity of a function is the logarithm of the fraction of its
//! grid values needed to rebuild it, by a fixed family of approximation
//! methods, with error at most ε. This crate provides:
//!
//! - exact complexities of modulus-of-continuity classes and the Hölder
//!   coefficient pair ([`class_complexity`]), with a brute-force minimax
//!   oracle;
//! - the reconstruction family ([`approximation`]);
//! - individual complexities `S(ε)`, `S_N(ε)` from the error-versus-spacing
//!   curve ([`individual_complexity`]);
//! - the empirical coefficients `(A, B)` of `ln ε = A + B ln S`
//!   ([`coefficient_estimation`]);
//! - synthetic test functions ([`generators`]) and sliding-window change
//!   detection on coefficient tracks ([`segmentation`]).
//!
//! All logarithms are natural and functions are normalized by the uniform
//! norm.

pub mod approximation;
pub mod class_complexity;
pub mod coefficient_estimation;
pub mod error;
pub mod function_model;
pub mod generators;
pub mod individual_complexity;
pub mod segmentation;

pub use approximation::{best_reconstruction, reconstruct, ApproximationMethod, ReconstructionResult};
pub use class_complexity::{
    class_complexity, holder_coefficients, minimax_cell_error_oracle, ClassSpec, HolderCoefficients,
    ModulusOfContinuity,
};
pub use coefficient_estimation::{
    coefficient_profile, fit_complexity, sweep, ComplexityCoefficients, RecoveryErrorCurve, SelectionMode,
    SweepConfig,
};
pub use error::{Error, Result};
pub use function_model::{error_between, uniform_subgrid, ErrorNorm, SampledFunction, SubgridSelection};
pub use generators::{generate, GeneratorKind, GeneratorSpec};
pub use individual_complexity::{complexity_at, delta_curve, h_star, ComplexityValue, DeltaCurve};
pub use segmentation::{coefficient_track, detect_changes, DetectorConfig, SegmentationResult, WindowConfig};
