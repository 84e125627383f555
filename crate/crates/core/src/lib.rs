//! Contracted rotations `x ↦ Ax + b (mod Z^d)` on the unit cube: exact
//! evaluation, continuity domains, the conjugated and extended piecewise
//! contractions, and certification of periodic attractors.

pub mod arith;
pub mod bounded;
pub mod conjugation;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod extension;
pub mod rotation;

pub use arith::{parse_rational, RMatrix, RVector, Rational};
pub use error::{Error, Result};
pub use rotation::{CodeVector, ContractedRotation};
