//! Exact approximation tools for maximum homomorphism problems over
//! rational-valued structures.
//!
//! Values are exact rationals throughout. Graphs are encoded as structures
//! over one binary symbol `e` with both orientations of every edge, so a
//! graph with m unit edges has total weight 2m.

pub mod dense;
pub mod error;
pub mod exact;
pub mod fragility;
pub mod generators;
pub mod graphs;
pub mod io;
pub mod lp;
pub mod overcast;
pub mod ptas;
pub mod reductions;
pub mod relax;
pub mod scalar;
pub mod structures;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use structures::{Assignment, Signature, ValuedStructure};

/// Arbitrary-precision rational, the default scalar.
pub type Rational = num_rational::BigRational;

pub type Structure = ValuedStructure<Rational>;
