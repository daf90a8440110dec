//! Desk-scale numerical toolkit for variable-exponent Lebesgue and
//! Musielak-Orlicz spaces on truncated dyadic grids.
//!
//! The crate provides:
//!
//! - an expression DSL for exponents, weights, symbols and test functions
//!   ([`expr`]),
//! - uniform dyadic grids with exact cell quadrature and (optionally
//!   shifted) dyadic cube enumeration ([`grid`]),
//! - variable exponents with conjugation and log-Holder diagnostics
//!   ([`exponent`]),
//! - generalized Phi-functions, modulars, Luxemburg norms, conjugates and
//!   generalized inverses ([`gphi`]),
//! - weights, Muckenhoupt-type constants, bump conditions and oscillation
//!   norms ([`weights`]),
//! - sparse families built by stopping-time decompositions and the sparse
//!   operators they generate ([`sparse`]),
//! - model singular/fractional operators, commutators and maximal
//!   operators ([`operators`]),
//! - an experiment harness with suite registry, CSV/JSON/SVG reporting and
//!   deterministic seeded trials ([`harness`]).
//!
//! All value-carrying types are generic over the floating-point scalar via
//! [`scalar::Scalar`]; the harness and the CLI work with the `f64` aliases
//! exported at the crate root.

pub mod scalar;

pub mod expr;
pub mod grid;

pub mod exponent;
pub mod gphi;

pub mod weights;

pub mod sparse;

pub mod operators;

pub mod harness;

/// `f64` grid function, the default scalar used by the harness.
pub type GridFn = grid::GridFunction<f64>;
