//! Sum-of-exponentials compression of the fractional integration kernel
//! t^{α-1}/Γ(α) and modal time stepping for time-fractional equations.
//!
//! The pipeline runs bottom-up:
//!
//! 1. [`raprox`] fits a barycentric rational approximant to z^α by AAA and
//!    turns it into pole/residue form;
//! 2. [`kernel`] maps that into the multipole kernel
//!    Σ c_k/(s + d_k) + c_∞ of s^{-α};
//! 3. [`schemes`] integrates u = u₀ + K̃ * F[u] through m decoupled modes;
//! 4. [`problems`] supplies scalar, heat and Cahn–Hilliard operators and the
//!    convergence harness, and [`oracle`] an independent direct-quadrature
//!    reference solver.

// `!(x > 0.0)` style tests deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tabulated coefficients keep their published digits.
#![allow(clippy::excessive_precision)]

pub mod dd;
pub mod error;
pub mod fmt;
pub mod kernel;
pub mod oracle;
pub mod problems;
pub mod quad;
pub mod raprox;
pub mod schemes;
pub mod specfun;

pub use error::{Error, Result};
