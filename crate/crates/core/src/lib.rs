//! Design and analysis toolkit for collinear two-crystal SPDC sources of
//! polarization-entangled photon pairs.
//!
//! The crate is organised bottom-up:
//!
//! * [`optics`] evaluates refractive indices of uniaxial crystals from
//!   Sellmeier data, along with derivatives, group indices and walk-off.
//! * [`phasematch`] solves collinear type-I phase matching and simulates the
//!   down-conversion spectra.
//! * [`compensation`] builds the relative phase between the two emission
//!   processes, sizes the birefringent compensators and predicts the
//!   visibility that survives spectral averaging.
//! * [`expsim`] simulates and analyses the coincidence-counting experiment.
//!
//! Wavelengths are in nanometres and lengths in millimetres throughout the
//! public API.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compensation;
pub mod error;
pub mod expsim;
pub mod numeric;
pub mod optics;
pub mod phasematch;

pub use error::{Error, Result};
