//! Geometry, closed-form theory, and perturbation models for studying how
//! sign-flip and magnitude-type weight perturbations propagate through
//! ReLU + RMSNorm layers.
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the default
//! `std` feature for hardware float intrinsics and the standard RNG plumbing.
//!
//! Layout:
//! - [`geometry`]: RMSNorm, radial/transverse decomposition, angle metrics,
//!   the per-row scaling bound and the RMSNorm Fréchet derivative.
//! - [`theory`]: closed-form constants and curves (Bussgang limits, orthant
//!   energies, the transverse energy ratio `c(p)`, leverage ratios).
//! - [`perturb`]: seeded weight/input generation and every perturbation or
//!   quantization model (sign flips, constant-δ, ternary, entry/column flips).
//! - [`matrix`]: the minimal dense row-major matrix these need (matvec only).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
mod fmath;
pub mod geometry;
pub mod matrix;
pub mod perturb;
pub mod theory;

pub use error::CoreError;
pub use matrix::Matrix;
