//! Desk-scale computation for the three-term polynomial progression
//! `x, x + y^2 - 1, x + 2(y^2 - 1)`.
//!
//! The crate is split by role:
//!
//! * [`arith`]: primorials, the W-tricked polynomials, Hensel lifting checks,
//!   binomial-basis torus polynomials and rational approximation.
//! * [`signal`]: finitely supported functions on the integers, kernels and
//!   Fourier evaluation.
//! * [`gowers`]: multiplicative derivatives, box norms and dual functions.
//! * [`counting`]: the trilinear counting operators, configuration counting
//!   and exact extremal search.
//! * [`expsum`]: Gauss sums, Weyl sums, moments and arc classification.
//! * [`nil`]: exact Heisenberg and abelian group algebra, polynomial
//!   sequences and torus approximation.
//!
//! [`verify`] bundles the property suites that the command line runs, and
//! [`report`] holds the structured result type they produce.

pub mod arith;
pub mod counting;
mod error;
pub mod expsum;
pub mod gowers;
pub mod nil;
pub mod report;
pub mod rng;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
