//! Predicted and empirical densities of prime and square-free values of
//! multivariate integer polynomials.
//!
//! The crate is organised by the quantity being computed:
//!
//! * [`poly`]: polynomial representation, parsing and structural checks.
//! * [`region`]: rational boxes and exact interval bounds over them.
//! * [`local`]: point counts modulo `p` and `p^2` and the Euler products
//!   built from them.
//! * [`expsum`]: complete exponential sums, the square-free weights
//!   `g(q, d)` and `G(q)`, and exact orthogonality identities.
//! * [`integral`]: the archimedean factor (oscillatory integrals, the
//!   logarithmic integral over a box and its expansion in `1/log P`).
//! * [`counting`]: exact enumeration of prime, square-free and joint prime
//!   values over lattice points.
//! * [`experiment`]: hypothesis gating, experiment orchestration and reports.

pub mod arith;
pub mod counting;
pub mod error;
pub mod experiment;
pub mod expsum;
pub mod integral;
pub mod local;
pub mod poly;
pub mod region;

pub use error::{Error, Result};
pub use poly::{parse_polynomial, MultiPoly};
