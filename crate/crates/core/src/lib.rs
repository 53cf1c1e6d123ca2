//! Harmonic analysis on the Boolean hypercube and the unit sphere.
//!
//! The hypercube is embedded in the sphere as `H = {±1/√n}^n`. The crate
//! provides exact Fourier analysis of functions restricted to `H`, the
//! zonal (Gegenbauer) machinery of spherical harmonics, sparse polynomial
//! algebra with harmonic decomposition, samplers for Haar rotations and the
//! spherical heat kernel, and Monte Carlo experiments that check sensitivity
//! bounds for randomly rotated polynomial threshold functions.
//!
//! Modules:
//!
//! - [`special`]: harmonic dimensions, normalized Gegenbauer polynomials,
//!   Kravchuk polynomials, sphere areas and Gauss–Jacobi quadrature.
//! - [`boolean`]: truth tables, the Walsh–Hadamard transform, noise and
//!   average sensitivity.
//! - [`poly`]: sparse multivariate polynomials, rotation, harmonic
//!   decomposition, great-circle restriction and root counting.
//! - [`sphere`]: rotations, uniform points, heat-kernel angle samplers and
//!   spherical sensitivity.
//! - [`experiments`]: end-to-end bound checks producing [`BoundReport`]s.

pub mod boolean;
mod error;
pub mod experiments;
pub mod poly;
pub mod special;
pub mod sphere;

pub use error::{Error, Result};
pub use experiments::{BoundReport, Comparison};
pub use poly::SparsePolynomial;
pub use sphere::{Estimate, Rotation};
