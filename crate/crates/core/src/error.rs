//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by kinematic operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinError {
    /// An input contained NaN or infinity, or violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    /// A matrix handed in as a rotation is not orthonormal within tolerance.
    #[error("matrix is not orthonormal: deviation {deviation:.3e} exceeds {tolerance:.1e}")]
    NonOrthonormal { deviation: f64, tolerance: f64 },

    /// The law-of-cosines argument fell outside [-1, 1] by more than the
    /// clamping window: the handle is too far from (or too close to) the RCM
    /// for the link lengths to form a triangle.
    #[error("unreachable geometry: arccos argument {argument:.9} outside [-1, 1]")]
    Unreachable { argument: f64 },

    /// A construction degenerated (vanishing cross product, coincident points).
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(&'static str),

    /// A joint vector does not match the chain's joint count.
    #[error("dimension mismatch: expected {expected} joint values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A streamed sample arrived with a timestamp at or before the previous one.
    #[error("out-of-order sample: t={got} after t={last}")]
    OutOfOrderSample { last: f64, got: f64 },
}
