//! Numerical laboratory for the α-Grushin cylinder.
//!
//! The metric `dx² + |x|^{-2α} dy²` on `R × S¹` degenerates on the singular
//! circle `x = 0`. This crate evaluates its curvature quantities, realizes it
//! as a surface of revolution in `R³`, integrates its geodesic flow, and
//! studies the self-adjointness of the intrinsic (`Δ − cK`) and extrinsic
//! (`Δ − K + H²`) Laplacians fiber by fiber, both analytically and through
//! time evolution.
//!
//! Module map:
//!
//! * [`geometry`]: the metric family and pointwise curvatures.
//! * [`embedding`]: revolution profiles, meshes and isometry checks.
//! * [`geodesics`]: Hamiltonian geodesic flow, wavefronts, conjugate times.
//! * [`spectral`]: Fourier-mode fiber operators and endpoint classification.
//! * [`tube`]: thin-tube Rayleigh quotients against the extrinsic Laplacian.
//! * [`evolution`]: heat and Schrödinger evolution of one fiber.
//! * [`cli`]: the `grushin` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod embedding;
pub mod error;
pub mod evolution;
pub mod geodesics;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod spectral;
pub mod tube;

pub use error::{GrushinError, Result};
pub use geometry::{CurvatureSample, GrushinModel, Interval};
