//! Feedback interference-channel laboratory.
//!
//! Exact GF(p) linear algebra, the linear deterministic K-user channel with
//! output feedback, two-block alignment schemes, closed-form Gaussian rate
//! expressions, and small Monte Carlo checks of the Gaussian signal algebra.

pub mod channel;
pub mod field;
pub mod lattice;
pub mod matrix;
pub mod montecarlo;
pub mod rates;
pub mod schemes;

pub use channel::{
    apply_channel, run_feedback_session, BlockSignal, DetParams, DetRegime, Feedback, FeedbackCode, SignMatrix,
    Transcript,
};
pub use field::{Field, GfElem, Prime};
pub use lattice::{make_lattice, NestedLattice1D};
pub use matrix::{shift_matrix, LinAlgError, Matrix};
pub use montecarlo::{simulate_strong_two_block, EffectiveChannelStats, MCConfig};
pub use rates::{GaussParams, GaussRegime, RatePoint};
pub use schemes::{AlignmentSolution, Scheme, SchemeError, VerifyReport};

/// Exact rational used for deterministic rates.
pub type Rational = num_rational::Ratio<i64>;
/// Matrix over GF(p).
pub type GfMatrix = Matrix<GfElem>;
/// Matrix over the rationals.
pub type RationalMatrix = Matrix<Rational>;
/// Vector over GF(p).
pub type GfVector = Vec<GfElem>;
/// Gaussian channel parameters in double precision.
pub type GaussParams64 = GaussParams<f64>;
/// Gaussian channel parameters in single precision.
pub type GaussParams32 = GaussParams<f32>;
/// Nested lattice pair in double precision.
pub type Lattice64 = NestedLattice1D<f64>;
