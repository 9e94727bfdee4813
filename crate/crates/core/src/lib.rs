//! Exact-arithmetic laboratory for normalized Birkhoff sums of indicator
//! functions over the dyadic odometer.
//!
//! Sets are finite unions of rational intervals in `[0,1)`, laws are finitely
//! supported rational measures, and every inequality a construction relies on
//! is re-checked with exact comparisons before a certificate is returned.

pub mod birkhoff;
pub mod constructors;
pub mod error;
pub mod evaluator;
pub mod exec;
pub mod lattice;
pub mod levels;
pub mod manifest;
pub mod measures;
pub mod odometer;
pub mod rational;
pub mod sequence;
pub mod sets;
pub mod tower;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measures::DiscreteMeasure;
pub use rational::Rational;
pub use sequence::NormalizingSequence;
pub use sets::{IntervalSet, SetOp};
