//! Exact optimum for coverage along a single azimuth cut, plus numerical
//! certificates for the two cases where rotation alone cannot remove squint.
//!
//! For a fixed azimuth `φ0` the coverage directions span the plane containing
//! the z axis and the azimuth `φ0`. A line array whose axis is perpendicular to
//! that plane sees zero path difference for every elevation and frequency, so
//! uniform weights reach the full array gain `N` everywhere. With elements on
//! the local y axis and `α = β = 0`, the axis points along `Rz(γ) e_y`, which is
//! perpendicular to the cut for `γ = φ0 + kπ`. Written for a line along the
//! local x axis the same orientation reads `γ = φ0 + π/2 + kπ`; see
//! [`ClosedForm1DSolution::axis_azimuth`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[allow(unused_imports)]
use num_traits::Float;

use crate::gain::{BeamWeights, CoverageGrid};
use crate::geometry::{direction_vector, rotation_matrix, wrap_angle, AntennaLayout, Position, RotationAngles};
use crate::{Error, Result};

/// The zero-squint line-array configuration for one azimuth cut.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm1DSolution {
    pub rotation: RotationAngles,
    pub weights: BeamWeights,
    pub layout: AntennaLayout,
    /// Gain attained at every point of the cut: the full array gain `N`.
    pub achieved_gain: f64,
    phi0: f64,
}

impl ClosedForm1DSolution {
    /// Global azimuth of the array axis, `φ0 + π/2` wrapped to `[0, 2π)`.
    ///
    /// This is the z-rotation that orients a line array laid along the local
    /// x axis; for the local-y placement used here it equals `rotation.gamma() + π/2`.
    pub fn axis_azimuth(&self) -> f64 {
        wrap_angle(self.phi0 + FRAC_PI_2)
    }

    /// The other optimal branch, rotated by `π` about z.
    pub fn flipped(&self) -> RotationAngles {
        RotationAngles::new(0.0, 0.0, self.rotation.gamma() + core::f64::consts::PI)
    }
}

/// Closed-form optimum for azimuth cut `phi0`: `α = β = 0`, `γ = φ0`, uniform
/// weights, elements on the local y axis at exactly `min_spacing` pitch,
/// centered in the region.
pub fn solve_1d(
    phi0: f64,
    n_antennas: usize,
    min_spacing: f64,
    region_half_width: f64,
) -> Result<ClosedForm1DSolution> {
    if n_antennas == 0 {
        return Err(Error::InfeasibleGeometry("at least one antenna is required".into()));
    }
    let span = (n_antennas - 1) as f64 * min_spacing;
    if span > 2.0 * region_half_width * (1.0 + 1e-12) {
        return Err(Error::InfeasibleGeometry(format!(
            "{n_antennas} antennas at spacing {min_spacing} need a region of width {span}, have {}",
            2.0 * region_half_width
        )));
    }
    let positions: Vec<Position> = (0..n_antennas)
        .map(|n| {
            let y = (n as f64 - 0.5 * (n_antennas - 1) as f64) * min_spacing;
            Position::new(y.clamp(-region_half_width, region_half_width), 0.0)
        })
        .collect();
    let layout = AntennaLayout::new(positions, region_half_width, min_spacing)?;
    Ok(ClosedForm1DSolution {
        rotation: RotationAngles::new(0.0, 0.0, phi0),
        weights: BeamWeights::uniform(n_antennas),
        layout,
        achieved_gain: n_antennas as f64,
        phi0,
    })
}

/// `max |r1ᵀ v(θ, φ)|` over the grid's angles, where `r1` is the first column
/// of the rotation: the phase slope a line array along the local x axis keeps
/// under this rotation. No precondition on the grid.
pub fn ula_phase_residual(r: RotationAngles, grid: &CoverageGrid) -> f64 {
    let r1 = rotation_matrix(r).r1();
    let mut worst: f64 = 0.0;
    for &theta in grid.thetas() {
        for &phi in grid.phis() {
            worst = worst.max(r1.dot(&direction_vector(theta, phi).v).abs());
        }
    }
    worst
}

/// Certificate that a rotated line array cannot cancel the squint term over a
/// 2D angular region: a strictly positive [`ula_phase_residual`].
///
/// Errors if either angular extent of the grid is zero, where the claim does
/// not apply.
pub fn diagnose_ula_2d(r: RotationAngles, grid: &CoverageGrid) -> Result<f64> {
    if grid.thetas().len() < 2 || grid.phis().len() < 2 {
        return Err(Error::DegenerateRegion("line-array diagnostic needs both elevation and azimuth extents".into()));
    }
    let extent = |xs: &[f64]| xs[xs.len() - 1] - xs[0];
    if !(extent(grid.thetas()) > 0.0 && extent(grid.phis()) > 0.0) {
        return Err(Error::DegenerateRegion("zero angular extent".into()));
    }
    Ok(ula_phase_residual(r, grid))
}

/// Certificate that a rotated planar array cannot cancel the squint term over
/// an elevation cut at azimuth `phi0`: returns `(max |g1|, max |g2|)` with
/// `g1 = vᵀ s1` and `g2 = vᵀ s2`. Since `s1 ⟂ s2`, at least one is positive.
pub fn diagnose_upa_1d(r: RotationAngles, phi0: f64, theta_grid: &[f64]) -> Result<(f64, f64)> {
    let spans_plane =
        theta_grid.iter().enumerate().any(|(i, a)| theta_grid[i + 1..].iter().any(|b| Float::sin(a - b).abs() > 1e-12));
    if !spans_plane {
        return Err(Error::DegenerateRegion("elevation cut needs two non-collinear directions".into()));
    }
    let rot = rotation_matrix(r);
    let (s1, s2) = (rot.s1(), rot.s2());
    let mut g = (0.0f64, 0.0f64);
    for &theta in theta_grid {
        let v = direction_vector(theta, phi0).v;
        g.0 = g.0.max(v.dot(&s1).abs());
        g.1 = g.1.max(v.dot(&s2).abs());
    }
    Ok(g)
}
