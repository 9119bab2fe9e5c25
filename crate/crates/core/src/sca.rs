//! Convex surrogate subproblems for the weights and the element positions,
//! and the successive-convex-approximation loops that iterate them.
//!
//! **Weights.** Lifting `W = ωωᴴ` turns every gain into the linear form
//! `aᴴ W a`, with `diag(W) = 1/N`. Rank one is restored through the penalty
//! `f(W) = ‖W‖* − ‖W‖₂`, whose concave part is linearized at the previous
//! iterate; each step is then the SDP
//! `max t − ρ f̃(W | W_prev)` over `aᴴ W a ≥ t`, `diag(W) = 1/N`, `W ⪰ 0`.
//!
//! **Positions.** With `u = α(y_n − y_m) + β(z_n − z_m) − (φ_n − φ_m)` the gain
//! is `(1/N) Σ cos u`. The bound `cos u ≥ cos u₀ − sin u₀ (u − u₀) − ½ (u − u₀)²`
//! gives a concave quadratic minorant touching at the previous layout. The
//! pairwise spacing is linearized from below (it is convex), so the step is a
//! convex QCQP whose solution already satisfies the true spacing.
//!
//! Both loops solve on a pruned set of grid points and add back any point
//! whose constraint is violated (cutting planes), so every accepted iterate is
//! optimal for the full grid.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::gain::{gains_from_projections, project, BeamWeights, GridPoint, PhaseProjection};
use crate::geometry::{min_pairwise_distance, AntennaLayout, Position, RotationAngles};
use crate::rng::StreamRng;
use crate::solver::qcqp::{solve_qcqp, Qcqp, QcqpSettings, QuadConstraint};
use crate::solver::sdp::{solve_fixed_diagonal_sdp, FixedDiagonalSdp, SdpSettings};
use crate::solver::{hermitian_eigen, IterateRecord, KktReport};
use crate::{Error, Result};

/// Upper limit of the penalty weight.
pub const RHO_MAX: f64 = 1e4;
/// Factor applied to the penalty weight when the iterates stall short of rank one.
pub const RHO_GROWTH: f64 = 2.0;
/// `f(W)` below this counts as rank one.
pub const RANK_ONE_TOL: f64 = 1e-4;
/// A weight iterate moving less than this (Frobenius) counts as stalled.
const STALL_STEP: f64 = 1e-2;
/// Points within this many dB of the current minimum are always kept.
const PRUNE_DB: f64 = 3.0;
/// Fraction of the remaining points kept at random.
const PRUNE_SAMPLE: f64 = 0.1;
const MAX_CUT_ROUNDS: usize = 10;

/// Lifted weights `W`, ideally `ωωᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianLift {
    w: DMatrix<Complex64>,
}

impl HermitianLift {
    /// Checks that `w` is square and Hermitian within `1e-10`.
    pub fn new(w: DMatrix<Complex64>) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(Error::LengthMismatch { expected: w.nrows(), got: w.ncols() });
        }
        let asym = (&w - w.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        if asym > 1e-10 {
            return Err(Error::Solver(format!("matrix is not Hermitian (asymmetry {asym:e})")));
        }
        Ok(Self { w })
    }

    pub fn from_weights(w: &BeamWeights) -> Self {
        let v = DVector::from_vec(w.complex());
        Self { w: &v * v.adjoint() }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    /// `aᴴ W a`.
    pub fn quad_form(&self, a: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = Complex64::from(0.0);
            for j in 0..n {
                row += self.w[(i, j)] * a[j];
            }
            acc += (a[i].conj() * row).re;
        }
        acc
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.w).0
    }

    /// `max_n |W_nn − 1/N|`.
    pub fn diagonal_error(&self) -> f64 {
        let target = 1.0 / self.dim() as f64;
        (0..self.dim()).map(|i| (self.w[(i, i)] - target).norm()).fold(0.0, f64::max)
    }
}

/// Penalty weight and stopping rule of the weight SCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub rho: f64,
    pub max_iters: usize,
    /// Relative change of the penalized objective that counts as a stall.
    pub tol: f64,
}

impl PenaltyConfig {
    pub fn new(rho: f64, max_iters: usize, tol: f64) -> Result<Self> {
        if !(rho > 0.0) || !(tol > 0.0) {
            return Err(Error::InvalidConfig(format!("penalty rho {rho} and tol {tol} must be positive")));
        }
        Ok(Self { rho, max_iters, tol })
    }

    /// `ρ = 0.1 N`, 50 iterations, tolerance `1e-4`.
    pub fn for_antennas(n: usize) -> Self {
        Self { rho: 0.1 * n.max(1) as f64, max_iters: 50, tol: 1e-4 }
    }
}

/// Largest-magnitude eigenvalue and the matching subgradient `sign(λ) uuᴴ` of
/// the spectral norm. Ties go to the first eigenpair in descending order.
fn spectral_subgradient(w: &DMatrix<Complex64>) -> (f64, DMatrix<Complex64>) {
    let (vals, vecs) = hermitian_eigen(w);
    let n = vals.len();
    let k = if vals[n - 1].abs() > vals[0].abs() { n - 1 } else { 0 };
    let u = vecs.column(k);
    let g = (&u * u.adjoint()) * Complex64::from(vals[k].signum());
    (vals[k].abs(), g)
}

/// `f(W) = ‖W‖* − ‖W‖₂`: the sum of all but the largest singular value.
pub fn rank_one_penalty(w: &HermitianLift) -> f64 {
    let vals = w.eigenvalues();
    let nuclear: f64 = vals.iter().map(|v| v.abs()).sum();
    let spectral = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (nuclear - spectral).max(0.0)
}

/// `f̃(W | W_prev) = ‖W‖* − (‖W_prev‖₂ + Re Tr(G (W − W_prev)))` with `G` a
/// subgradient of the spectral norm at `W_prev` (`ssᴴ` for PSD `W_prev`).
/// Majorizes [`rank_one_penalty`] and touches it at `W = W_prev`.
pub fn penalty_majorant(w: &HermitianLift, w_prev: &HermitianLift) -> f64 {
    let nuclear: f64 = w.eigenvalues().iter().map(|v| v.abs()).sum();
    let (norm_prev, g) = spectral_subgradient(&w_prev.w);
    let diff = &w.w - &w_prev.w;
    let lin: f64 = g.iter().zip(diff.transpose().iter()).map(|(a, b)| (a * b).re).sum();
    nuclear - (norm_prev + lin)
}

/// One penalized SDP solve.
#[derive(Debug, Clone)]
pub struct BeamformingStep {
    pub lift: HermitianLift,
    /// `min_l aₗᴴ W aₗ` over the constraints passed in.
    pub t: f64,
    /// `t − ρ f̃(W | W_prev)`.
    pub objective: f64,
    pub kkt: KktReport,
    pub converged: bool,
    pub log: Vec<IterateRecord>,
}

/// Solves `max t − ρ f̃(W | W_prev)` subject to `aᴴ W a ≥ t` for every response
/// `a`, `diag(W) = 1/N` and `W ⪰ 0`.
pub fn solve_beamforming_step(
    grid_responses: &[Vec<Complex64>],
    w_prev: &HermitianLift,
    cfg: &PenaltyConfig,
) -> Result<BeamformingStep> {
    let n = w_prev.dim();
    if w_prev.diagonal_error() > 1e-6 {
        return Err(Error::Solver("previous lift violates diag(W) = 1/N".into()));
    }
    let (_, g) = spectral_subgradient(&w_prev.w);
    let cost = g * Complex64::from(cfg.rho);
    let diag = vec![1.0 / n as f64; n];
    let sol = solve_fixed_diagonal_sdp(
        &FixedDiagonalSdp { diagonal: &diag, cost: &cost, cuts: grid_responses },
        &SdpSettings::default(),
    )?;
    let lift = HermitianLift { w: sol.w };
    let objective = sol.t - cfg.rho * penalty_majorant(&lift, w_prev);
    Ok(BeamformingStep { lift, t: sol.t, objective, kkt: sol.kkt, converged: sol.converged, log: sol.log })
}

/// Unit-modulus weights from the principal eigenvector `u₁` of `W`:
/// `ω = e^{j arg u₁} / √N`, with the global phase fixed so `φ₀ = 0`.
pub fn extract_weights(w: &HermitianLift) -> BeamWeights {
    let (_, vecs) = hermitian_eigen(&w.w);
    let u = vecs.column(0);
    let reference = u.iter().find(|v| v.norm() > 1e-12).map(|v| v.arg()).unwrap_or(0.0);
    BeamWeights::from_phases(u.iter().map(|v| if v.norm() > 0.0 { v.arg() - reference } else { 0.0 }).collect())
}

/// `α = 2πf/c · vᵀs1`, `β = 2πf/c · vᵀs2`: the response phase of element `n`
/// at this grid point is `α y_n + β z_n`.
pub fn phase_projection(point: &GridPoint, r: RotationAngles) -> PhaseProjection {
    project(&point.wavevector(), r)
}

/// Quadratic minorant `q(x) = xᵀ A x + bᵀ x + c` of the gain at one grid
/// point, over `x = [y₁..y_N, z₁..z_N]` in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionSurrogate {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl PositionSurrogate {
    pub fn value(&self, positions: &[Position]) -> f64 {
        let x = stack(positions);
        x.dot(&(&self.a * &x)) + self.b.dot(&x) + self.c
    }
}

fn stack(positions: &[Position]) -> DVector<f64> {
    let n = positions.len();
    DVector::from_fn(2 * n, |i, _| if i < n { positions[i].y } else { positions[i - n].z })
}

/// Expansion data of the minorant at one grid point: `q(p) = c0 − (2/N) Σ S_n e_n
/// − eᵀ W̄ e` with `e_n = α Δy_n + β Δz_n` and `W̄ = I − 11ᵀ/N`.
#[derive(Debug, Clone)]
struct LocalModel {
    proj: PhaseProjection,
    c0: f64,
    s: Vec<f64>,
}

impl LocalModel {
    fn new(proj: PhaseProjection, phases: &[f64], positions: &[Position]) -> Self {
        let n = positions.len();
        let psi: Vec<f64> = positions.iter().zip(phases).map(|(p, ph)| proj.phase(p) - ph).collect();
        let mut c0 = 0.0;
        let mut s = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let (sn, cs) = Float::sin_cos(psi[i] - psi[j]);
                c0 += cs;
                s[i] += sn;
            }
        }
        Self { proj, c0: c0 / n as f64, s }
    }

    fn value(&self, base: &[Position], positions: &[Position]) -> f64 {
        let n = base.len() as f64;
        let (mut lin, mut sq, mut sum) = (0.0, 0.0, 0.0);
        for ((p, q), s) in positions.iter().zip(base).zip(&self.s) {
            let e = self.proj.alpha * (p.y - q.y) + self.proj.beta * (p.z - q.z);
            lin += s * e;
            sq += e * e;
            sum += e;
        }
        self.c0 - 2.0 / n * lin - (sq - sum * sum / n)
    }

    fn surrogate(&self, base: &[Position]) -> PositionSurrogate {
        let n = base.len();
        let nf = n as f64;
        let (al, be) = (self.proj.alpha, self.proj.beta);
        let coef = [al, be];
        let mut k = DMatrix::zeros(2 * n, 2 * n);
        for bi in 0..2 {
            for bj in 0..2 {
                let scale = coef[bi] * coef[bj];
                for i in 0..n {
                    for j in 0..n {
                        let wbar = if i == j { 1.0 } else { 0.0 } - 1.0 / nf;
                        k[(bi * n + i, bj * n + j)] = scale * wbar;
                    }
                }
            }
        }
        let g = DVector::from_fn(2 * n, |i, _| 2.0 / nf * coef[i / n] * self.s[i % n]);
        let x0 = stack(base);
        let kx0 = &k * &x0;
        PositionSurrogate { b: -&g + &kx0 * 2.0, c: self.c0 + g.dot(&x0) - x0.dot(&kx0), a: -k }
    }
}

/// The minorant of the gain at `point`, expanded at `layout_prev`.
pub fn build_position_surrogate(
    point: &GridPoint,
    r: RotationAngles,
    w: &BeamWeights,
    layout_prev: &AntennaLayout,
) -> Result<PositionSurrogate> {
    if w.len() != layout_prev.n_antennas() {
        return Err(Error::LengthMismatch { expected: layout_prev.n_antennas(), got: w.len() });
    }
    let model = LocalModel::new(phase_projection(point, r), w.phases(), layout_prev.positions());
    Ok(model.surrogate(layout_prev.positions()))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PositionStepOptions {
    /// Keep every `z_n` at its current value (line arrays).
    pub fix_z: bool,
    pub settings: Option<QcqpSettings>,
}

#[derive(Debug, Clone)]
pub struct PositionStep {
    pub layout: AntennaLayout,
    /// Optimal common lower bound on the surrogates.
    pub slack: f64,
    /// False when the previous layout was returned unchanged.
    pub moved: bool,
    /// Set when the QCQP failed and the previous layout was returned.
    pub solver_failed: bool,
    pub kkt: KktReport,
    pub log: Vec<IterateRecord>,
}

impl PositionStep {
    fn unchanged(layout: &AntennaLayout, slack: f64, solver_failed: bool) -> Self {
        Self { layout: layout.clone(), slack, moved: false, solver_failed, kkt: KktReport::default(), log: Vec::new() }
    }
}

/// Maximizes `min_l q_l(p)` over layouts in the movement region whose
/// linearized spacing at `layout_prev` is at least `d_min`.
///
/// Coordinates are rescaled by the largest surrogate curvature so the QCQP is
/// well conditioned. The result is checked against the true spacing and pulled
/// back toward `layout_prev` by halving if needed.
pub fn solve_position_step(
    surrogates: &[PositionSurrogate],
    layout_prev: &AntennaLayout,
    opts: &PositionStepOptions,
) -> Result<PositionStep> {
    let n = layout_prev.n_antennas();
    let base = layout_prev.positions();
    let x0 = stack(base);
    if let Some(s) = surrogates.iter().find(|s| s.b.len() != 2 * n || s.a.nrows() != 2 * n) {
        return Err(Error::LengthMismatch { expected: 2 * n, got: s.b.len() });
    }
    let values: Vec<f64> = surrogates.iter().map(|s| s.value(base)).collect();
    let current = values.iter().copied().fold(f64::INFINITY, f64::min);
    if surrogates.is_empty() {
        return Ok(PositionStep::unchanged(layout_prev, current, false));
    }

    let mut free = Vec::new();
    for axis in 0..2 {
        if axis == 1 && opts.fix_z {
            break;
        }
        for i in 0..n {
            let cell = layout_prev.bounds(i);
            let (lo, hi) = if axis == 0 { (cell.y_min, cell.y_max) } else { (cell.z_min, cell.z_max) };
            if hi - lo > 1e-15 * (1.0 + layout_prev.region_half_width()) {
                free.push((axis * n + i, lo, hi));
            }
        }
    }
    let curvature =
        surrogates.iter().flat_map(|s| free.iter().map(move |&(i, _, _)| s.a[(i, i)].abs())).fold(0.0, f64::max);
    let linear = surrogates
        .iter()
        .map(|s| 2.0 * (&s.a * &x0) + &s.b)
        .flat_map(|g| free.iter().map(move |&(i, _, _)| g[i].abs()))
        .fold(0.0, f64::max);
    if free.is_empty() || (curvature == 0.0 && linear == 0.0) {
        return Ok(PositionStep::unchanged(layout_prev, current, false));
    }
    let kappa = if curvature > 0.0 { curvature.sqrt() } else { 1.0 / layout_prev.region_half_width().max(1e-300) };

    let nf = free.len();
    let nv = nf + 1;
    let mut constraints = Vec::new();
    for (s, &q0) in surrogates.iter().zip(&values) {
        let grad = 2.0 * (&s.a * &x0) + &s.b;
        let p = DMatrix::from_fn(nv, nv, |r, c| {
            if r < nf && c < nf {
                -2.0 * s.a[(free[r].0, free[c].0)] / (kappa * kappa)
            } else {
                0.0
            }
        });
        let q = DVector::from_fn(nv, |r, _| if r < nf { -grad[free[r].0] / kappa } else { 1.0 });
        constraints.push(QuadConstraint { p: Some(p), q, r: -q0 });
    }
    // Spacing: ‖p_nm‖² ≥ 2 p_nmᵀ p⁰_nm − ‖p⁰_nm‖², scaled by κ².
    let dmin = kappa * layout_prev.min_spacing();
    let slot = |coord: usize| free.iter().position(|&(i, _, _)| i == coord);
    for i in 0..n {
        for j in i + 1..n {
            let d0 = [kappa * (base[i].y - base[j].y), kappa * (base[i].z - base[j].z)];
            let mut q = DVector::zeros(nv);
            for (axis, d) in d0.iter().enumerate() {
                if let Some(k) = slot(axis * n + i) {
                    q[k] -= 2.0 * d;
                }
                if let Some(k) = slot(axis * n + j) {
                    q[k] += 2.0 * d;
                }
            }
            constraints.push(QuadConstraint::affine(q, dmin * dmin - d0[0] * d0[0] - d0[1] * d0[1]));
        }
    }
    for (k, &(coord, lo, hi)) in free.iter().enumerate() {
        let mut up = DVector::zeros(nv);
        up[k] = 1.0;
        constraints.push(QuadConstraint::affine(up.clone(), -kappa * (hi - x0[coord])));
        constraints.push(QuadConstraint::affine(-up, -kappa * (x0[coord] - lo)));
    }
    let mut c = DVector::zeros(nv);
    c[nf] = -1.0;
    let mut start = DVector::zeros(nv);
    start[nf] = current - 1.0;
    let settings = opts.settings.unwrap_or_default();
    let sol = match solve_qcqp(&Qcqp { c, constraints }, &start, &settings) {
        Ok(s) if s.kkt.primal_residual <= 1e-6 => s,
        _ => return Ok(PositionStep::unchanged(layout_prev, current, true)),
    };

    let mut x = x0.clone();
    for (k, &(coord, lo, hi)) in free.iter().enumerate() {
        x[coord] = (x0[coord] + sol.x[k] / kappa).clamp(lo, hi);
    }
    let target: Vec<Position> = (0..n).map(|i| Position::new(x[i], x[n + i])).collect();
    let mut eta = 1.0;
    for _ in 0..40 {
        let trial: Vec<Position> = base
            .iter()
            .zip(&target)
            .map(|(p, q)| Position::new(p.y + eta * (q.y - p.y), p.z + eta * (q.z - p.z)))
            .collect();
        if min_pairwise_distance(&trial) >= layout_prev.min_spacing() && layout_prev.admits(&trial) {
            let layout = layout_prev.with_positions(trial)?;
            return Ok(PositionStep {
                layout,
                slack: sol.x[nf],
                moved: true,
                solver_failed: false,
                kkt: sol.kkt,
                log: sol.log,
            });
        }
        eta *= 0.5;
    }
    Ok(PositionStep::unchanged(layout_prev, current, true))
}

/// Indices kept for a pruned solve: every value within [`PRUNE_DB`] of the
/// minimum plus a random [`PRUNE_SAMPLE`] share of the rest.
fn select_active(values: &[f64], rng: &mut StreamRng) -> Vec<usize> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let threshold = if min > 0.0 { min * Float::powf(10.0, PRUNE_DB / 10.0) } else { min + 1e-12 };
    values
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| {
            let keep = v <= threshold;
            let sampled = rng.uniform_open_closed() <= PRUNE_SAMPLE;
            (keep || sampled).then_some(i)
        })
        .collect()
}

/// Adds to `active` every index whose value falls below `level` by more than
/// a relative `1e-9`; returns whether any was added.
fn add_violators(values: &[f64], level: f64, active: &mut Vec<usize>) -> bool {
    let tol = 1e-9 * (1.0 + level.abs());
    let mut added = false;
    for (i, &v) in values.iter().enumerate() {
        if v < level - tol && !active.contains(&i) {
            active.push(i);
            added = true;
        }
    }
    if added {
        active.sort_unstable();
    }
    added
}

fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Result of the weight SCA.
#[derive(Debug, Clone)]
pub struct BeamformingOutcome {
    /// Best extracted weights seen, never worse than the initial weights.
    pub weights: BeamWeights,
    pub min_gain: f64,
    /// Last SDP iterate.
    pub lift: HermitianLift,
    pub iterations: usize,
    pub final_rho: f64,
    /// `λ₂/λ₁` of the last iterate.
    pub eigen_ratio: f64,
    /// Whether the iterates reached rank one.
    pub converged: bool,
    pub solver_log: Vec<IterateRecord>,
}

/// Runs penalized SDR steps from `w0` until the lift is rank one and the
/// penalized objective stalls, doubling `ρ` whenever progress stalls first.
///
/// `responses` are the array responses at every grid point; `rng` drives the
/// constraint pruning.
pub fn beamforming_sca(
    responses: &[Vec<Complex64>],
    w0: &BeamWeights,
    cfg: &PenaltyConfig,
    rng: &mut StreamRng,
) -> Result<BeamformingOutcome> {
    if responses.is_empty() {
        return Err(Error::ZeroCount);
    }
    let gain_of = |w: &BeamWeights| -> f64 {
        let lift = HermitianLift::from_weights(w);
        min_of(&responses.iter().map(|a| lift.quad_form(a)).collect::<Vec<_>>())
    };
    let mut best = (w0.clone(), gain_of(w0));
    let mut prev = HermitianLift::from_weights(w0);
    let mut rho = cfg.rho;
    let mut prev_obj: Option<f64> = None;
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let quad: Vec<f64> = responses.iter().map(|a| prev.quad_form(a)).collect();
        let mut active = select_active(&quad, rng);
        let step_cfg = PenaltyConfig { rho, ..*cfg };
        let mut step = None;
        for _ in 0..MAX_CUT_ROUNDS {
            let cuts: Vec<Vec<Complex64>> = active.iter().map(|&i| responses[i].clone()).collect();
            let s = solve_beamforming_step(&cuts, &prev, &step_cfg)?;
            let full: Vec<f64> = responses.iter().map(|a| s.lift.quad_form(a)).collect();
            let more = add_violators(&full, s.t, &mut active);
            step = Some(s);
            if !more {
                break;
            }
        }
        let step = step.expect("at least one cut round");
        let offset = log.len();
        log.extend(step.log.iter().map(|r| IterateRecord { iter: offset + r.iter, ..*r }));

        let weights = extract_weights(&step.lift);
        let g = gain_of(&weights);
        if g > best.1 {
            best = (weights, g);
        }
        let f = rank_one_penalty(&step.lift);
        let obj = step.t - rho * f;
        let moved = (step.lift.matrix() - prev.matrix()).norm();
        let stalled = moved < STALL_STEP || prev_obj.is_some_and(|p| (obj - p).abs() <= cfg.tol * obj.abs().max(1.0));
        prev = step.lift;
        if stalled {
            if f <= RANK_ONE_TOL {
                converged = true;
                break;
            }
            rho = (rho * RHO_GROWTH).min(RHO_MAX);
            prev_obj = None;
        } else {
            prev_obj = Some(obj);
        }
    }
    let vals = prev.eigenvalues();
    let eigen_ratio = if vals[0] > 0.0 && vals.len() > 1 { vals[1].max(0.0) / vals[0] } else { 0.0 };
    Ok(BeamformingOutcome {
        weights: best.0,
        min_gain: best.1,
        lift: prev,
        iterations,
        final_rho: rho,
        eigen_ratio,
        converged,
        solver_log: log,
    })
}

/// Iteration budget of the position SCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionScaConfig {
    pub max_iters: usize,
    /// Relative min-gain improvement below which the loop stops.
    pub tol: f64,
    pub fix_z: bool,
}

impl Default for PositionScaConfig {
    fn default() -> Self {
        Self { max_iters: 20, tol: 1e-4, fix_z: false }
    }
}

#[derive(Debug, Clone)]
pub struct PositionOutcome {
    pub layout: AntennaLayout,
    pub min_gain: f64,
    pub iterations: usize,
    /// Set if any QCQP failed; the layout of that step was kept.
    pub solver_failed: bool,
    pub solver_log: Vec<IterateRecord>,
}

/// Repeats [`solve_position_step`] at fixed weights and rotation. The
/// full-grid min gain never decreases from one iterate to the next.
pub fn position_sca(
    projections: &[PhaseProjection],
    w: &BeamWeights,
    layout0: &AntennaLayout,
    cfg: &PositionScaConfig,
    rng: &mut StreamRng,
) -> Result<PositionOutcome> {
    if projections.is_empty() {
        return Err(Error::ZeroCount);
    }
    let mut layout = layout0.clone();
    let mut gains = gains_from_projections(projections, w.phases(), layout.positions());
    let mut current = min_of(&gains);
    let mut log = Vec::new();
    let mut iterations = 0;
    let mut solver_failed = false;
    let opts = PositionStepOptions { fix_z: cfg.fix_z, settings: None };

    for it in 0..cfg.max_iters {
        iterations = it + 1;
        let base = layout.positions().to_vec();
        let models: Vec<LocalModel> = projections.iter().map(|p| LocalModel::new(*p, w.phases(), &base)).collect();
        let mut active = select_active(&gains, rng);
        let mut step = None;
        for _ in 0..MAX_CUT_ROUNDS {
            let surrogates: Vec<PositionSurrogate> = active.iter().map(|&i| models[i].surrogate(&base)).collect();
            let s = solve_position_step(&surrogates, &layout, &opts)?;
            let full: Vec<f64> = models.iter().map(|m| m.value(&base, s.layout.positions())).collect();
            let more = s.moved
                && add_violators(
                    &full,
                    min_of(
                        &full
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| active.contains(i))
                            .map(|(_, v)| *v)
                            .collect::<Vec<_>>(),
                    ),
                    &mut active,
                );
            step = Some(s);
            if !more {
                break;
            }
        }
        let step = step.expect("at least one cut round");
        let offset = log.len();
        log.extend(step.log.iter().map(|r| IterateRecord { iter: offset + r.iter, ..*r }));
        solver_failed |= step.solver_failed;
        if !step.moved {
            break;
        }
        let new_gains = gains_from_projections(projections, w.phases(), step.layout.positions());
        let new_min = min_of(&new_gains);
        if !(new_min >= current) {
            break;
        }
        let gain = new_min - current;
        layout = step.layout;
        gains = new_gains;
        current = new_min;
        if gain <= cfg.tol * current.abs().max(1e-12) {
            break;
        }
    }
    Ok(PositionOutcome { layout, min_gain: current, iterations, solver_failed, solver_log: log })
}
