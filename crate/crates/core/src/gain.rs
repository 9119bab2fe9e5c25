//! Frequency-dependent array response, beam gain, coverage grids and the
//! worst-case (min over angle and frequency) gain.
//!
//! Every optimizer and benchmark scores candidates through [`GainEvaluator`],
//! which caches the scaled direction vectors `2πf/c · v(θ, φ)` of a grid so a
//! new rotation only costs two dot products per grid point.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use nalgebra::Vector3;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::geometry::{
    direction_vector, rotation_matrix, wrap_angle, AntennaLayout, DirectionVector, Position, RotationAngles,
};
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Analog beamforming weights `ω_n = e^{jφ_n} / √N`; only the phases are
/// stored so the modulus constraint holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights {
    phases: Vec<f64>,
}

impl BeamWeights {
    pub fn from_phases(phases: Vec<f64>) -> Self {
        Self { phases: phases.into_iter().map(wrap_angle).collect() }
    }

    /// All phases zero.
    pub fn uniform(n: usize) -> Self {
        Self { phases: alloc::vec![0.0; n] }
    }

    /// Conjugate-matched beam: `ω ∝ a`, so `|ωᴴ a|² = N`.
    pub fn matched(response: &[Complex64]) -> Self {
        Self::from_phases(response.iter().map(|a| a.arg()).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The complex weights `e^{jφ_n} / √N`.
    pub fn complex(&self) -> Vec<Complex64> {
        let scale = 1.0 / (self.phases.len() as f64).sqrt();
        self.phases.iter().map(|&p| Complex64::from_polar(scale, p)).collect()
    }
}

/// Per-grid-point projection of the scaled direction onto the array axes:
/// the response phase of antenna `n` is `alpha * y_n + beta * z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhaseProjection {
    /// rad/m, multiplies `y`.
    pub alpha: f64,
    /// rad/m, multiplies `z`.
    pub beta: f64,
}

impl PhaseProjection {
    #[inline]
    pub fn phase(&self, p: &Position) -> f64 {
        self.alpha * p.y + self.beta * p.z
    }
}

/// One sample `(θ, φ, f)` of the coverage set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub theta: f64,
    pub phi: f64,
    pub freq: f64,
}

impl GridPoint {
    pub fn direction(&self) -> DirectionVector {
        direction_vector(self.theta, self.phi)
    }

    /// `2πf/c · v(θ, φ)`, in rad/m.
    pub fn wavevector(&self) -> Vector3<f64> {
        self.direction().v * (TAU * self.freq / SPEED_OF_LIGHT)
    }
}

/// Uniform samples of `[θmin, θmax] × [φmin, φmax] × [fmin, fmax]`.
///
/// Axes are ascending and include both endpoints; a single-sample axis holds
/// the midpoint of its range. Points are flattened `l1`-major, then `l2`,
/// then `l3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    theta_range: [f64; 2],
    phi_range: [f64; 2],
    freq_range: [f64; 2],
    thetas: Vec<f64>,
    phis: Vec<f64>,
    freqs: Vec<f64>,
}

fn axis(range: [f64; 2], count: usize) -> Result<Vec<f64>> {
    let [lo, hi] = range;
    if !(lo <= hi) {
        return Err(Error::InvertedRange { lo, hi });
    }
    if count == 0 {
        return Err(Error::ZeroCount);
    }
    if count == 1 {
        return Ok(alloc::vec![0.5 * (lo + hi)]);
    }
    let step = (hi - lo) / (count - 1) as f64;
    Ok((0..count).map(|i| if i + 1 == count { hi } else { lo + step * i as f64 }).collect())
}

/// Samples the coverage set with `counts = (L1, L2, L3)` points per axis.
pub fn build_grid(
    theta_range: [f64; 2],
    phi_range: [f64; 2],
    freq_range: [f64; 2],
    counts: [usize; 3],
) -> Result<CoverageGrid> {
    let thetas = axis(theta_range, counts[0])?;
    let phis = axis(phi_range, counts[1])?;
    let freqs = axis(freq_range, counts[2])?;
    if freqs.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::NonPositiveFrequency(freq_range[0]));
    }
    Ok(CoverageGrid { theta_range, phi_range, freq_range, thetas, phis, freqs })
}

impl CoverageGrid {
    pub fn counts(&self) -> [usize; 3] {
        [self.thetas.len(), self.phis.len(), self.freqs.len()]
    }

    pub fn len(&self) -> usize {
        self.thetas.len() * self.phis.len() * self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta_range(&self) -> [f64; 2] {
        self.theta_range
    }

    pub fn phi_range(&self) -> [f64; 2] {
        self.phi_range
    }

    pub fn freq_range(&self) -> [f64; 2] {
        self.freq_range
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phis(&self) -> &[f64] {
        &self.phis
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn index(&self, l1: usize, l2: usize, l3: usize) -> usize {
        (l1 * self.phis.len() + l2) * self.freqs.len() + l3
    }

    pub fn point(&self, idx: usize) -> GridPoint {
        let nf = self.freqs.len();
        let np = self.phis.len();
        GridPoint { theta: self.thetas[idx / (nf * np)], phi: self.phis[(idx / nf) % np], freq: self.freqs[idx % nf] }
    }

    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Midpoint of the angular ranges.
    pub fn angular_centroid(&self) -> (f64, f64) {
        (0.5 * (self.theta_range[0] + self.theta_range[1]), 0.5 * (self.phi_range[0] + self.phi_range[1]))
    }

    /// Midpoint of the frequency range.
    pub fn center_frequency(&self) -> f64 {
        0.5 * (self.freq_range[0] + self.freq_range[1])
    }
}

/// Array response `a_n = exp(j 2π f/c vᵀ(s1 y_n + s2 z_n))`.
pub fn array_response(
    freq: f64,
    dir: &DirectionVector,
    r: RotationAngles,
    layout: &AntennaLayout,
) -> Result<Vec<Complex64>> {
    if !(freq > 0.0) {
        return Err(Error::NonPositiveFrequency(freq));
    }
    let kv = dir.v * (TAU * freq / SPEED_OF_LIGHT);
    let proj = project(&kv, r);
    Ok(response_from_projection(&proj, layout.positions()))
}

pub(crate) fn project(kv: &Vector3<f64>, r: RotationAngles) -> PhaseProjection {
    let rot = rotation_matrix(r);
    PhaseProjection { alpha: kv.dot(&rot.s1()), beta: kv.dot(&rot.s2()) }
}

pub(crate) fn response_from_projection(proj: &PhaseProjection, positions: &[Position]) -> Vec<Complex64> {
    positions.iter().map(|p| Complex64::from_polar(1.0, proj.phase(p))).collect()
}

/// `|ωᴴ a|²`.
pub fn beam_gain(w: &BeamWeights, a: &[Complex64]) -> Result<f64> {
    if w.len() != a.len() {
        return Err(Error::LengthMismatch { expected: w.len(), got: a.len() });
    }
    let s: Complex64 = w.complex().iter().zip(a).map(|(w, a)| w.conj() * a).sum();
    Ok(s.norm_sqr())
}

/// Beam gains of one `(weights, rotation, layout)` triple over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GainField<'g> {
    pub grid: &'g CoverageGrid,
    pub gains: Vec<f64>,
    pub min_gain: f64,
    pub argmin: usize,
}

impl GainField<'_> {
    /// Minimum over frequency for every `(θ, φ)` pair, `l1`-major.
    pub fn wideband_gains(&self) -> Vec<f64> {
        self.gains.chunks(self.grid.freqs().len()).map(|c| c.iter().copied().fold(f64::INFINITY, f64::min)).collect()
    }
}

/// Evaluates the gain at every grid point.
pub fn gain_field<'g>(
    w: &BeamWeights,
    r: RotationAngles,
    layout: &AntennaLayout,
    grid: &'g CoverageGrid,
) -> Result<GainField<'g>> {
    check_dims(w, layout)?;
    let eval = GainEvaluator::new(grid);
    let gains = eval.gains(w, r, layout.positions());
    let (argmin, min_gain) = argmin(&gains);
    Ok(GainField { grid, gains, min_gain, argmin })
}

/// The max-min objective: smallest gain over the grid.
pub fn min_gain(w: &BeamWeights, r: RotationAngles, layout: &AntennaLayout, grid: &CoverageGrid) -> Result<f64> {
    check_dims(w, layout)?;
    Ok(GainEvaluator::new(grid).min_gain(w, r, layout.positions()))
}

fn check_dims(w: &BeamWeights, layout: &AntennaLayout) -> Result<()> {
    if w.len() != layout.n_antennas() {
        return Err(Error::LengthMismatch { expected: layout.n_antennas(), got: w.len() });
    }
    Ok(())
}

pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

/// Cached wavevectors of a grid.
#[derive(Debug, Clone)]
pub struct GainEvaluator {
    wavevectors: Vec<Vector3<f64>>,
}

impl GainEvaluator {
    pub fn new(grid: &CoverageGrid) -> Self {
        Self { wavevectors: grid.points().map(|p| p.wavevector()).collect() }
    }

    pub fn len(&self) -> usize {
        self.wavevectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavevectors.is_empty()
    }

    pub fn projections(&self, r: RotationAngles) -> Vec<PhaseProjection> {
        let rot = rotation_matrix(r);
        let (s1, s2) = (rot.s1(), rot.s2());
        self.wavevectors.iter().map(|kv| PhaseProjection { alpha: kv.dot(&s1), beta: kv.dot(&s2) }).collect()
    }

    /// Array responses at every grid point.
    pub fn responses(&self, r: RotationAngles, positions: &[Position]) -> Vec<Vec<Complex64>> {
        self.projections(r).iter().map(|proj| response_from_projection(proj, positions)).collect()
    }

    pub fn gains(&self, w: &BeamWeights, r: RotationAngles, positions: &[Position]) -> Vec<f64> {
        let proj = self.projections(r);
        gains_from_projections(&proj, w.phases(), positions)
    }

    pub fn min_gain(&self, w: &BeamWeights, r: RotationAngles, positions: &[Position]) -> f64 {
        let proj = self.projections(r);
        let n = positions.len() as f64;
        proj.iter().map(|pr| point_gain(pr, w.phases(), positions, n)).fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn gains_from_projections(proj: &[PhaseProjection], phases: &[f64], positions: &[Position]) -> Vec<f64> {
    let n = positions.len() as f64;
    proj.iter().map(|pr| point_gain(pr, phases, positions, n)).collect()
}

#[inline]
fn point_gain(pr: &PhaseProjection, phases: &[f64], positions: &[Position], n: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (p, &phi) in positions.iter().zip(phases) {
        let (s, c) = Float::sin_cos(pr.phase(p) - phi);
        re += c;
        im += s;
    }
    (re * re + im * im) / n
}
