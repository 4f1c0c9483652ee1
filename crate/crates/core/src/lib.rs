// Copyright 2026 The smoothdos Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite-volume random operators `h = h_0 + λ Σ ω_n P_n`, their resolvent
//! kernels, and Monte Carlo estimators for fractional moments, integrated
//! density of states, the smoothed density of states and its energy
//! derivatives.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: site spaces, enumerations, projection families and the
//!   assembly of restricted Hamiltonians.
//! - [`disorder`]: the polynomial bump single-site densities with exact
//!   derivatives, direct and tilted sampling.
//! - [`spectral`]: banded resolvent solves, kernel blocks, Hermitian
//!   eigendecompositions and matrix exponentials.
//! - [`estimators`]: the Monte Carlo engines and decay fits.
//! - [`verify`]: desk-scale numerical certificates for the smoothing and
//!   resolvent-averaging statements these estimators rely on.

pub mod disorder;
pub mod estimators;
pub mod graph;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod verify;

pub use nalgebra::Complex;

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
