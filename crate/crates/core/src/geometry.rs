//! Array kinematics: panel rotation, element positions in the global frame and
//! direction-of-departure vectors.
//!
//! The array lies in the local `y`-`z` plane. A rotation `R = Rx(α) Ry(β) Rz(γ)`
//! maps local coordinates to the global frame, so element `n` at local
//! `(0, y_n, z_n)` sits at `s1 * y_n + s2 * z_n` where `s1` and `s2` are the
//! second and third columns of `R`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::{Matrix3, Vector3};
use num_traits::Float;

use crate::{Error, Result};

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x - TAU * Float::floor(x / TAU);
    // `r` can round up to exactly 2π for tiny negative inputs.
    if r >= TAU || r < 0.0 {
        0.0
    } else {
        r
    }
}

/// Rotation of the array panel about the global x, y and z axes, in radians.
///
/// Angles are wrapped into `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotationAngles {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl RotationAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha: wrap_angle(alpha), beta: wrap_angle(beta), gamma: wrap_angle(gamma) }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn matrix(&self) -> RotationMatrix {
        rotation_matrix(*self)
    }
}

/// A proper rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn as_matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn column(&self, i: usize) -> Vector3<f64> {
        self.0.column(i).into_owned()
    }

    /// First column: the direction of the local x axis (the array normal).
    pub fn r1(&self) -> Vector3<f64> {
        self.column(0)
    }

    /// Second column: the global direction multiplying local `y` coordinates.
    pub fn s1(&self) -> Vector3<f64> {
        self.column(1)
    }

    /// Third column: the global direction multiplying local `z` coordinates.
    pub fn s2(&self) -> Vector3<f64> {
        self.column(2)
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Largest entry of `|RᵀR - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).amax()
    }

    /// Maps a local-frame point into the global frame.
    pub fn apply(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.0 * local
    }
}

/// Builds `R = Rx(α) Ry(β) Rz(γ)` entry by entry.
pub fn rotation_matrix(r: RotationAngles) -> RotationMatrix {
    let (sa, ca) = Float::sin_cos(r.alpha);
    let (sb, cb) = Float::sin_cos(r.beta);
    let (sg, cg) = Float::sin_cos(r.gamma);
    RotationMatrix(Matrix3::new(
        cb * cg,
        -cb * sg,
        sb,
        ca * sg + sa * sb * cg,
        ca * cg - sa * sb * sg,
        -sa * cb,
        sa * sg - ca * sb * cg,
        sa * cg + ca * sb * sg,
        ca * cb,
    ))
}

/// Unit vector toward elevation `theta` and azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionVector {
    pub theta: f64,
    pub phi: f64,
    pub v: Vector3<f64>,
}

/// `v = [cos θ cos φ, cos θ sin φ, sin θ]ᵀ`.
pub fn direction_vector(theta: f64, phi: f64) -> DirectionVector {
    let (st, ct) = Float::sin_cos(theta);
    let (sp, cp) = Float::sin_cos(phi);
    DirectionVector { theta, phi, v: Vector3::new(ct * cp, ct * sp, st) }
}

/// Local coordinates of one element in the array plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Position {
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(y: f64, z: f64) -> Self {
        Self { y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        Float::hypot(self.y - other.y, self.z - other.z)
    }
}

/// Axis-aligned rectangle in the array plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Cell {
    pub fn square(half_width: f64) -> Self {
        Self { y_min: -half_width, y_max: half_width, z_min: -half_width, z_max: half_width }
    }

    fn contains(&self, p: &Position, slack: f64) -> bool {
        p.y >= self.y_min - slack && p.y <= self.y_max + slack && p.z >= self.z_min - slack && p.z <= self.z_max + slack
    }

    fn intersect(&self, other: &Cell) -> Cell {
        Cell {
            y_min: self.y_min.max(other.y_min),
            y_max: self.y_max.min(other.y_max),
            z_min: self.z_min.max(other.z_min),
            z_max: self.z_max.min(other.z_max),
        }
    }
}

// Relative slack used when checking spacing and region membership, so that
// layouts built at exactly `d_min` pitch on the region boundary validate.
const FEASIBILITY_RTOL: f64 = 1e-9;

/// Element positions together with the movement constraints they must obey:
/// every element inside the `A × A` square region centered at the local
/// origin (and inside its own cell, when cells are assigned), and every pair
/// at least `min_spacing` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout {
    positions: Vec<Position>,
    region_half_width: f64,
    min_spacing: f64,
    cells: Option<Vec<Cell>>,
}

impl AntennaLayout {
    pub fn new(positions: Vec<Position>, region_half_width: f64, min_spacing: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InfeasibleGeometry("layout has no antennas".into()));
        }
        if !(region_half_width >= 0.0) || !(min_spacing >= 0.0) {
            return Err(Error::InfeasibleGeometry(format!(
                "region half-width {region_half_width} and spacing {min_spacing} must be nonnegative"
            )));
        }
        let layout = Self { positions, region_half_width, min_spacing, cells: None };
        layout.validate()?;
        Ok(layout)
    }

    /// Restricts element `n` to `cells[n]` (intersected with the region).
    pub fn with_cells(mut self, cells: Vec<Cell>) -> Result<Self> {
        if cells.len() != self.positions.len() {
            return Err(Error::LengthMismatch { expected: self.positions.len(), got: cells.len() });
        }
        self.cells = Some(cells);
        self.validate()?;
        Ok(self)
    }

    /// Same constraints, new positions.
    pub fn with_positions(&self, positions: Vec<Position>) -> Result<Self> {
        if positions.len() != self.positions.len() {
            return Err(Error::LengthMismatch { expected: self.positions.len(), got: positions.len() });
        }
        let layout = Self { positions, ..self.clone() };
        layout.validate()?;
        Ok(layout)
    }

    pub fn n_antennas(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn region_half_width(&self) -> f64 {
        self.region_half_width
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn cells(&self) -> Option<&[Cell]> {
        self.cells.as_deref()
    }

    /// The box element `n` may move in.
    pub fn bounds(&self, n: usize) -> Cell {
        let region = Cell::square(self.region_half_width);
        match &self.cells {
            Some(cells) => region.intersect(&cells[n]),
            None => region,
        }
    }

    /// Smallest pairwise distance, `+inf` for a single element.
    pub fn min_pairwise_distance(&self) -> f64 {
        min_pairwise_distance(&self.positions)
    }

    /// Whether `positions` would satisfy this layout's constraints.
    pub fn admits(&self, positions: &[Position]) -> bool {
        positions.len() == self.positions.len() && self.check_positions(positions).is_ok()
    }

    fn validate(&self) -> Result<()> {
        self.check_positions(&self.positions)
    }

    fn check_positions(&self, positions: &[Position]) -> Result<()> {
        let slack = FEASIBILITY_RTOL * self.region_half_width.max(self.min_spacing).max(1e-12);
        for (n, p) in positions.iter().enumerate() {
            if !(p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InfeasibleGeometry(format!("antenna {n} has a non-finite coordinate")));
            }
            if !self.bounds(n).contains(p, slack) {
                return Err(Error::InfeasibleGeometry(format!(
                    "antenna {n} at ({}, {}) lies outside its movement region",
                    p.y, p.z
                )));
            }
        }
        let d = min_pairwise_distance(positions);
        if d < self.min_spacing * (1.0 - FEASIBILITY_RTOL) {
            return Err(Error::InfeasibleGeometry(format!(
                "minimum spacing {d} is below the required {}",
                self.min_spacing
            )));
        }
        Ok(())
    }
}

pub(crate) fn min_pairwise_distance(positions: &[Position]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, p) in positions.iter().enumerate() {
        for q in &positions[i + 1..] {
            best = best.min(p.distance(q));
        }
    }
    best
}

/// Global-frame position of antenna `n`: `s1 * y_n + s2 * z_n`.
pub fn antenna_position_gcs(layout: &AntennaLayout, r: RotationAngles, n: usize) -> Result<Vector3<f64>> {
    let p = layout.positions().get(n).ok_or(Error::IndexOutOfRange { index: n, len: layout.n_antennas() })?;
    let rot = rotation_matrix(r);
    Ok(rot.s1() * p.y + rot.s2() * p.z)
}
