//! Wideband beam-squint mitigation with six-dimensional movable antenna
//! (6DMA) arrays.
//!
//! The crate evaluates the frequency-dependent beam gain of a planar array
//! whose elements can be repositioned inside a square region and whose panel
//! can be rotated in 3D, and maximizes the worst-case gain over an
//! angle-frequency coverage set:
//!
//! * [`geometry`]: rotation matrices, element positions and direction vectors.
//! * [`gain`]: array response, beam gain, coverage grids and the min-gain
//!   objective.
//! * [`closed_form`]: the exact optimum for coverage over a single azimuth
//!   cut, and numerical certificates that no rotation removes squint for a
//!   linear array over a 2D region or for a planar array over a 1D region.
//! * [`sca`]: the two convex surrogate subproblems (lifted beamforming with a
//!   rank-one penalty, and a quadratic minorant program for positions).
//! * [`rotation`]: coarse/fine grid search and Gibbs-sampling refinement of
//!   the rotation angles.
//! * [`ao`]: the alternating optimizer and the benchmark schemes.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. IO, configuration and the command line live in the companion
//! `sixdma` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ao;
pub mod closed_form;
mod error;
pub mod gain;
pub mod geometry;
pub mod rng;
pub mod rotation;
pub mod sca;
pub mod solver;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in meters at frequency `freq_hz`.
pub fn wavelength(freq_hz: f64) -> f64 {
    SPEED_OF_LIGHT / freq_hz
}

/// Linear gain to dB. Values below `1e-300` are clamped first so reports never
/// contain `-inf`.
pub fn to_db(gain: f64) -> f64 {
    use num_traits::Float;
    10.0 * Float::log10(gain.max(1e-300))
}
