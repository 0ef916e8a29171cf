//! Numerical laboratory for mean-zero fields on the discrete equilateral
//! torus whose discrete hessian is bounded above, per rhombus class, by a
//! slack vector `s = (s0, s1, s2)`.
//!
//! The set of such fields is a bounded convex polytope living in the
//! mean-zero hyperplane of `R^{n²}`. The crate provides:
//!
//! * [`torus`] — vertex indexing of `(Z/nZ)²` and the three classes of unit
//!   lattice rhombi with their four-point stencils;
//! * [`hessian`] — stencil evaluation, the sparse constraint system, and
//!   membership testing;
//! * [`quadratic`] — the closed-form quadratic with prescribed constant
//!   hessian, its coarse piecewise-linear interpolation, and the resulting
//!   `ℓ∞` diameter witness;
//! * [`sampler`] — hit-and-run sampling of the uniform measure on the
//!   polytope, with seeded reproducible chains;
//! * [`volume`] — an exact vertex-enumeration volume oracle at `n = 2`,
//!   multiphase Monte Carlo volume estimation for larger `n`, facet weights
//!   by central finite differences, and the weight-cone test;
//! * [`spectral`] — the weighted second-difference operator diagonalized by
//!   torus characters, its closed-form eigenvalues, a block-averaging
//!   operator, and norm floor checks;
//! * [`covering`] — covering-polytope identifiers (boundary sets,
//!   quantization, offsets), block height fields, and the anisotropic
//!   surface statistics they feed.
//!
//! Core geometry and operators are generic over the scalar type through
//! [`Scalar`] (`f32` or `f64`); Monte Carlo estimates are reported in `f64`.

pub mod covering;
pub mod field;
pub mod hessian;
pub mod quadratic;
pub mod sampler;
pub mod spectral;
pub mod torus;
pub mod volume;

mod scalar;

pub use field::SurfaceField;
pub use hessian::{ConstraintSystem, HessianTable, MembershipReport, SlackVector, Variant};
pub use quadratic::QuadraticCoeffs;
pub use sampler::ChainConfig;
pub use scalar::Scalar;
pub use spectral::SpectralWeights;
pub use torus::{EdgeClass, TorusLattice, VertexId};
pub use volume::{FacetWeights, VolumeEstimate};

/// Single-precision field.
pub type Field32 = SurfaceField<f32>;
/// Double-precision field.
pub type Field64 = SurfaceField<f64>;
/// Single-precision slack vector.
pub type Slack32 = SlackVector<f32>;
/// Double-precision slack vector.
pub type Slack64 = SlackVector<f64>;

/// Errors reported by the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("torus side length must be at least 2, got {0}")]
    InvalidSize(usize),
    #[error("slack entries must be nonnegative")]
    NegativeSlack,
    #[error("operation requires strictly positive slack (empty interior): {0:?}")]
    EmptyInterior([f64; 3]),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is infeasible (worst violation {0})")]
    Infeasible(f64),
    #[error("invalid direction: {0}")]
    InvalidDirection(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("no admissible cover scales: {0}")]
    NoCoverScales(String),
    #[error("preconditions make the report inapplicable: {0}")]
    Inapplicable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
