//! Channel modeling and joint beamformer / RIS-load optimization for
//! RIS-assisted multi-user MISO downlinks.
//!
//! The effective channel is `H̃ = H_u + G_l (diag(Z_L) − Z_ll)⁻¹ H_0`, where
//! the load impedances `Z_L` come from varactor capacitances. On top of that
//! the crate provides a max-min SINR beamformer based on uplink–downlink
//! duality, a block-coordinate ascent over the capacitances with Armijo
//! backtracking, exhaustive search over column-paired 1-bit states, and the
//! experiment drivers used by the `risopt` binary.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod histogram;
pub mod io;
pub mod optimizer;
pub mod ris;
pub mod scene;

pub(crate) mod complex_pair;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Dense complex matrix used throughout.
pub type CMatrix = DMatrix<Complex64>;
