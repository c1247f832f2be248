//! Finite-discretization engine for phase-space path integrals in momentum
//! representation.
//!
//! The crate evaluates T-transforms of generalized Gauss kernels with drift,
//! constant phase and Donsker delta pins, the Fredholm determinants that
//! normalize them, and the free-particle and harmonic-oscillator momentum
//! propagators built on top. Every route has an independent check in
//! [`oracle`].
//!
//! The crate is `no_std` and needs only `alloc`. The `std` feature forwards
//! to the numeric dependencies.

#![no_std]
// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod gausskernel;
pub mod operators;
pub mod oracle;
pub mod propagators;
pub mod timegrid;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// `|cos(√k t)|` at or below this counts as a singular time. Wide enough that
/// a caustic time quoted to eight significant digits is caught.
pub const SINGULAR_TIME_TOL: f64 = 1e-7;
