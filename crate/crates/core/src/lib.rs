//! Exact and sampled moment operators of random quantum channels.
//!
//! The crate works at the level of transfer matrices: coefficients of a
//! `t`-th moment operator in the basis of permutation operators (or its
//! localized, support-graded variant). Weingarten calculus runs over
//! arbitrary-precision rationals, so Haar and cHaar results are exact.
//! Noisy circuits are handled by a two-copy twirl simulator.

pub mod channels;
pub mod error;
pub mod exact;
pub mod localized;
pub mod moments;
pub mod sampling;
pub mod symmgroup;
pub mod twirlsim;
pub mod weingarten;

/// Arbitrary-precision rational with a positive, coprime denominator.
pub type Rational = num_rational::BigRational;

pub use error::{Error, Result};
pub use exact::ExactMatrix;
pub use localized::{BasisKind, BasisTag, Entries, Gram, TransferMatrix};
pub use moments::{EnsembleKind, EnsembleSpec, Value};
pub use symmgroup::{Permutation, SymmetricGroup};

/// Library version string embedded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
