//! Numerical core for measuring the intensity that the Fourier transform of a
//! planar measure assigns to a circle.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure and
//! reentrant; threading and file formats live in the `circle-lab` crate.
//!
//! Module map:
//!
//! * [`specfun`]: `J0`, `J1`, the scaled modified Bessel function `e^-t I0(t)`
//!   and the ratio `u(t) = sqrt(2 pi t) e^-t I0(t)`.
//! * [`quad`]: adaptive Gauss-Kronrod quadrature with Gaussian tail
//!   truncation, plus the defining-integral oracle for the Bessel functions.
//! * [`measures`]: representable measures on the plane and radial pairing.
//! * [`circles`]: the Gaussian and annulus approximate circle families.
//! * [`estimator`]: intensity series, extrapolation, detection and identity
//!   checks.
//! * [`lattice`]: planar lattices, shell tables and the sum of two squares.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Quadrature and Bessel tables are quoted to full published precision.
#![allow(clippy::excessive_precision)]

extern crate alloc;

pub mod circles;
mod error;
pub mod estimator;
pub mod lattice;
pub mod measures;
pub mod quad;
pub mod specfun;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
