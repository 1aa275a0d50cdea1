//! Finite ("desk-scale") models of lexicographically ordered trees, the
//! forcing posets built from them, and the capture invariants of linear
//! orders and trees. Every structure is small enough that its defining
//! clauses can be checked exhaustively.
//!
//! All structures are generic over an exact [`Scalar`]; [`Rational`] is the
//! default and [`BigRational`] is available for unbounded labels.

pub mod capture;
pub mod format;
pub mod fposet;
pub mod hposet;
pub mod ids;
pub mod lextree;
pub mod order;
pub mod pposet;
pub mod sample;
pub mod scalar;
pub mod seed;
pub mod violation;

pub use ids::{ElemId, Index, NodeId};
pub use scalar::Scalar;
pub use violation::{Clause, Violation};

/// Exact rational with machine-word components.
pub type Rational = num_rational::Ratio<i64>;
/// Exact rational with arbitrary-precision components.
pub type BigRational = num_rational::BigRational;

pub type Tree = lextree::LexTree<Rational>;
pub type LinearOrder = order::LinOrder<Rational>;
pub type Capture = capture::CaptureSet<Rational>;
pub type HCond = hposet::HCondition<Rational>;
pub type FAmb = fposet::FAmbient<Rational>;
pub type PAmb = pposet::PAmbient<Rational>;
pub type PCond = pposet::PCondition<Rational>;
