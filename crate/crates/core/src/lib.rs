//! Quasi-linear codes over prime fields.
//!
//! Exact GF(q) linear algebra, typical sets, coset / quasi-linear / nested
//! codebooks, single-letter covering bounds with second-moment exponents, and
//! seeded Monte Carlo experiments that run identically in parallel and
//! sequential mode.

pub mod bounds;
pub mod codes;
pub mod config;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod field;
pub mod md;
pub mod prob;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;
