//! Rotation search at fixed weights and layout.
//!
//! [`hybrid_search`] scores the centers of a uniform partition of `[0, 2π)³`
//! into cuboids, then a finer lattice inside the best cuboid.
//! [`gibbs_refine`] continues from there with a Gibbs-sampling chain whose
//! candidates at every step are the `6K` axis neighbors of the current point
//! plus random points of the `Δ`-lattice, selected with soft-max probabilities
//! of their min gain. The best point visited is returned, so refinement never
//! loses ground.
//!
//! The search routines take the objective as a closure, so they can be
//! exercised on synthetic landscapes; the `*_gain` wrappers plug in the
//! worst-case beam gain.

use alloc::vec::Vec;
use core::f64::consts::TAU;

#[allow(unused_imports)]
use num_traits::Float;

use crate::gain::{BeamWeights, CoverageGrid, GainEvaluator};
use crate::geometry::{wrap_angle, AntennaLayout, RotationAngles};
use crate::rng::{streams, StreamRng};
use crate::{Error, Result};

/// Cuboid counts per axis for the coarse and fine stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationGridConfig {
    pub coarse_counts: [usize; 3],
    pub fine_counts: [usize; 3],
}

impl Default for RotationGridConfig {
    fn default() -> Self {
        Self { coarse_counts: [12; 3], fine_counts: [8; 3] }
    }
}

impl RotationGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.coarse_counts.iter().chain(&self.fine_counts).any(|&c| c == 0) {
            return Err(Error::InvalidConfig("rotation grid counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Soft-max weight `μ` of the Gibbs selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Fixed(f64),
    /// `μ = numerator / G_min(r_start)`, fixed for the whole chain.
    Adaptive(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsConfig {
    /// Chain length `T`.
    pub iters: usize,
    /// Candidates per step `I ≥ 6K + 1`.
    pub candidates_per_iter: usize,
    /// Neighbor radius `K` in lattice steps.
    pub neighbor_radius: usize,
    /// Lattice resolution: `Δ = 2π / steps_per_turn`.
    pub steps_per_turn: u32,
    pub temperature: Temperature,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            iters: 50,
            candidates_per_iter: 6 * 3 + 10,
            neighbor_radius: 3,
            steps_per_turn: 360,
            temperature: Temperature::Adaptive(5.0),
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn step(&self) -> f64 {
        TAU / self.steps_per_turn as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates_per_iter < 6 * self.neighbor_radius + 1 {
            return Err(Error::InvalidConfig(alloc::format!(
                "Gibbs needs at least 6K + 1 = {} candidates per step, got {}",
                6 * self.neighbor_radius + 1,
                self.candidates_per_iter
            )));
        }
        if self.steps_per_turn == 0 {
            return Err(Error::InvalidConfig("Gibbs lattice needs at least one step per turn".into()));
        }
        match self.temperature {
            Temperature::Fixed(mu) | Temperature::Adaptive(mu) if !(mu >= 0.0) || !mu.is_finite() => {
                Err(Error::InvalidConfig("Gibbs temperature must be finite and nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

fn decompose(m: usize, counts: [usize; 3]) -> [usize; 3] {
    [m / (counts[1] * counts[2]), (m / counts[2]) % counts[1], m % counts[2]]
}

/// Centers `2π(n_i + ½)/Ñ_i` of all `Ñx·Ñy·Ñz` cuboids, `m = (n_x Ñy + n_y) Ñz + n_z`.
pub fn coarse_centers(cfg: &RotationGridConfig) -> Vec<RotationAngles> {
    let c = cfg.coarse_counts;
    (0..c[0] * c[1] * c[2])
        .map(|m| {
            let n = decompose(m, c);
            RotationAngles::from_array(core::array::from_fn(|i| TAU * (n[i] as f64 + 0.5) / c[i] as f64))
        })
        .collect()
}

/// The center of cuboid `m` followed by the cell centers of a
/// `fine_counts` lattice inside it.
pub fn fine_samples(cfg: &RotationGridConfig, m: usize) -> Vec<RotationAngles> {
    let c = cfg.coarse_counts;
    let f = cfg.fine_counts;
    let n = decompose(m, c);
    let width: [f64; 3] = core::array::from_fn(|i| TAU / c[i] as f64);
    let lo: [f64; 3] = core::array::from_fn(|i| n[i] as f64 * width[i]);
    let mut out = Vec::with_capacity(1 + f[0] * f[1] * f[2]);
    out.push(RotationAngles::from_array(core::array::from_fn(|i| lo[i] + 0.5 * width[i])));
    for k in 0..f[0] * f[1] * f[2] {
        let kk = decompose(k, f);
        out.push(RotationAngles::from_array(core::array::from_fn(|i| {
            lo[i] + (kk[i] as f64 + 0.5) * width[i] / f[i] as f64
        })));
    }
    out
}

/// First index of the largest value.
fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// Coarse-then-fine grid search of `objective`; returns the best fine sample
/// and its value. Ties go to the lowest index at both stages.
pub fn hybrid_search_by<F: FnMut(RotationAngles) -> f64>(
    mut objective: F,
    cfg: &RotationGridConfig,
) -> (RotationAngles, f64) {
    let centers = coarse_centers(cfg);
    let (m_star, _) = argmax(centers.iter().map(|&r| objective(r)));
    let fine = fine_samples(cfg, m_star);
    let (k, v) = argmax(fine.iter().map(|&r| objective(r)));
    (fine[k], v)
}

/// [`hybrid_search_by`] on the min gain over `grid`.
pub fn hybrid_search(
    w: &BeamWeights,
    layout: &AntennaLayout,
    grid: &CoverageGrid,
    cfg: &RotationGridConfig,
) -> RotationAngles {
    let eval = GainEvaluator::new(grid);
    hybrid_search_by(|r| eval.min_gain(w, r, layout.positions()), cfg).0
}

/// The `6K` candidates `r ± kΔ e_i`, ordered by `k`, then axis, then `+` before `−`.
pub fn gibbs_neighbors(r_prev: RotationAngles, cfg: &GibbsConfig) -> Vec<RotationAngles> {
    let delta = cfg.step();
    let base = r_prev.as_array();
    let mut out = Vec::with_capacity(6 * cfg.neighbor_radius);
    for k in 1..=cfg.neighbor_radius {
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut a = base;
                a[axis] = wrap_angle(a[axis] + sign * k as f64 * delta);
                out.push(RotationAngles::from_array(a));
            }
        }
    }
    out
}

/// `P_i = e^{μ G_i} / Σ_j e^{μ G_j}`, evaluated with the maximum subtracted.
pub fn selection_probabilities(gains: &[f64], mu: f64) -> Vec<f64> {
    let top = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = gains.iter().map(|g| Float::exp(mu * (g - top))).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Index of the first cumulative probability reaching `p ∈ (0, 1]`.
fn inverse_cdf(probs: &[f64], p: f64) -> usize {
    let mut acc = 0.0;
    for (i, q) in probs.iter().enumerate() {
        acc += q;
        if acc >= p {
            return i;
        }
    }
    probs.iter().rposition(|&q| q > 0.0).unwrap_or(0)
}

fn same_angles(a: &RotationAngles, b: &RotationAngles) -> bool {
    a.as_array().iter().zip(b.as_array()).all(|(x, y)| {
        let d = (x - y).abs();
        d < 1e-12 || (TAU - d).abs() < 1e-12
    })
}

/// Where a Gibbs candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// An axis neighbor of the current point.
    Neighbor,
    /// A uniform draw from the lattice.
    Random,
}

impl CandidateSource {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Neighbor => "B",
            Self::Random => "D",
        }
    }
}

/// One Gibbs step: candidates, their gains and selection probabilities, and
/// the selected index.
#[derive(Debug, Clone)]
pub struct GibbsDraw {
    pub candidates: Vec<RotationAngles>,
    pub gains: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub selected: usize,
}

impl GibbsDraw {
    pub fn chosen(&self) -> RotationAngles {
        self.candidates[self.selected]
    }

    pub fn source(&self, neighbor_count: usize) -> CandidateSource {
        if self.selected < neighbor_count {
            CandidateSource::Neighbor
        } else {
            CandidateSource::Random
        }
    }
}

/// A Gibbs step with objective `objective` and soft-max weight `mu`.
pub fn gibbs_step_by<F: FnMut(RotationAngles) -> f64>(
    r_prev: RotationAngles,
    mut objective: F,
    cfg: &GibbsConfig,
    mu: f64,
    rng: &mut StreamRng,
) -> GibbsDraw {
    let mut candidates = gibbs_neighbors(r_prev, cfg);
    let neighbors = candidates.len();
    let lattice = cfg.steps_per_turn as usize;
    let delta = cfg.step();
    while candidates.len() < cfg.candidates_per_iter {
        let r = RotationAngles::from_array(core::array::from_fn(|_| rng.below(lattice) as f64 * delta));
        if !candidates[..neighbors].iter().any(|b| same_angles(b, &r)) {
            candidates.push(r);
        }
    }
    let gains: Vec<f64> = candidates.iter().map(|&r| objective(r)).collect();
    let probabilities = selection_probabilities(&gains, mu);
    let selected = inverse_cdf(&probabilities, rng.uniform_open_closed());
    GibbsDraw { candidates, gains, probabilities, selected }
}

/// [`gibbs_step_by`] on the min gain over `grid`.
pub fn gibbs_step(
    r_prev: RotationAngles,
    w: &BeamWeights,
    layout: &AntennaLayout,
    grid: &CoverageGrid,
    cfg: &GibbsConfig,
    mu: f64,
    rng: &mut StreamRng,
) -> RotationAngles {
    let eval = GainEvaluator::new(grid);
    gibbs_step_by(r_prev, |r| eval.min_gain(w, r, layout.positions()), cfg, mu, rng).chosen()
}

/// One row of a Gibbs chain trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainRecord {
    pub t: usize,
    pub rotation: RotationAngles,
    pub min_gain: f64,
    pub source: CandidateSource,
}

#[derive(Debug, Clone)]
pub struct GibbsOutcome {
    pub best: RotationAngles,
    pub best_gain: f64,
    /// Gain at the starting point.
    pub start_gain: f64,
    pub mu: f64,
    pub trace: Vec<ChainRecord>,
}

/// Runs `T` Gibbs steps from `r_star` and returns the best point visited,
/// `r_star` included. Later points replace the incumbent only when strictly
/// better.
pub fn gibbs_refine_by<F: FnMut(RotationAngles) -> f64>(
    r_star: RotationAngles,
    mut objective: F,
    cfg: &GibbsConfig,
    rng: &mut StreamRng,
) -> GibbsOutcome {
    let start_gain = objective(r_star);
    let mu = match cfg.temperature {
        Temperature::Fixed(mu) => mu,
        Temperature::Adaptive(num) => num / start_gain.max(1e-9),
    };
    let neighbors = 6 * cfg.neighbor_radius;
    let mut best = (r_star, start_gain);
    let mut current = r_star;
    let mut trace = Vec::with_capacity(cfg.iters);
    for t in 1..=cfg.iters {
        let draw = gibbs_step_by(current, &mut objective, cfg, mu, rng);
        current = draw.chosen();
        let g = draw.gains[draw.selected];
        if g > best.1 {
            best = (current, g);
        }
        trace.push(ChainRecord { t, rotation: current, min_gain: g, source: draw.source(neighbors) });
    }
    GibbsOutcome { best: best.0, best_gain: best.1, start_gain, mu, trace }
}

/// [`gibbs_refine_by`] on the min gain over `grid`, drawing from the chain
/// stream of `cfg.seed`.
pub fn gibbs_refine(
    r_star: RotationAngles,
    w: &BeamWeights,
    layout: &AntennaLayout,
    grid: &CoverageGrid,
    cfg: &GibbsConfig,
) -> RotationAngles {
    let eval = GainEvaluator::new(grid);
    let mut rng = StreamRng::new(cfg.seed, streams::GIBBS);
    gibbs_refine_by(r_star, |r| eval.min_gain(w, r, layout.positions()), cfg, &mut rng).best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gain::build_grid;
    use crate::geometry::Position;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    const LAMBDA: f64 = crate::SPEED_OF_LIGHT / 1e12;

    fn dist(a: RotationAngles, b: [f64; 3]) -> f64 {
        a.as_array()
            .iter()
            .zip(b)
            .map(|(x, y)| {
                let d = wrap_angle(x - y);
                d.min(TAU - d).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn center_examples() {
        let one = coarse_centers(&RotationGridConfig { coarse_counts: [1, 1, 1], fine_counts: [1, 1, 1] });
        assert_eq!(one, vec![RotationAngles::new(PI, PI, PI)]);
        let two = coarse_centers(&RotationGridConfig { coarse_counts: [2, 1, 1], fine_counts: [1, 1, 1] });
        assert_abs_diff_eq!(two[0].alpha(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(two[1].alpha(), 3.0 * FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn centers_match_nested_loops() {
        let cfg = RotationGridConfig { coarse_counts: [2, 2, 2], fine_counts: [1, 1, 1] };
        let got = coarse_centers(&cfg);
        let mut want = vec![];
        for a in [0.5, 1.5] {
            for b in [0.5, 1.5] {
                for g in [0.5, 1.5] {
                    want.push([a * PI, b * PI, g * PI]);
                }
            }
        }
        assert_eq!(got.len(), 8);
        for (r, w) in got.iter().zip(want) {
            assert!(dist(*r, w) < 1e-15);
        }
    }

    #[test]
    fn constant_objective_returns_first_center() {
        let cfg = RotationGridConfig::default();
        let (r, _) = hybrid_search_by(|_| 1.0, &cfg);
        assert_eq!(r, coarse_centers(&cfg)[0]);
        // One antenna at the origin: the gain is exactly 1 for every rotation.
        let grid = build_grid([0.0, 1.0], [0.0, 1.0], [0.9e12, 1.1e12], [3, 3, 2]).unwrap();
        let layout = AntennaLayout::new(vec![Position::new(0.0, 0.0)], LAMBDA, 0.0).unwrap();
        let r = hybrid_search(&BeamWeights::uniform(1), &layout, &grid, &cfg);
        assert_eq!(r, coarse_centers(&cfg)[0]);
    }

    #[test]
    fn finds_zero_squint_line_orientation() {
        // (π, π, γ) is the z-rotation by γ + π, so γ = φ0 on the fine lattice
        // turns the y-axis line normal to the cut.
        let phi0 = PI / 4.0;
        let grid = build_grid([PI / 6.0, FRAC_PI_2], [phi0, phi0], [0.95e12, 1.05e12], [8, 1, 5]).unwrap();
        let s = crate::closed_form::solve_1d(phi0, 8, LAMBDA / 2.0, 2.0 * LAMBDA).unwrap();
        let cfg = RotationGridConfig { coarse_counts: [1, 1, 1], fine_counts: [1, 1, 4] };
        let r = hybrid_search(&s.weights, &s.layout, &grid, &cfg);
        let g = crate::gain::min_gain(&s.weights, r, &s.layout, &grid).unwrap();
        assert_abs_diff_eq!(g, 8.0, epsilon = 8e-9);
    }

    #[test]
    fn planted_optimum_returns_nearest_fine_sample() {
        let cfg = RotationGridConfig { coarse_counts: [4, 4, 4], fine_counts: [5, 5, 5] };
        let target = [1.0, 4.0, 5.5];
        let (r, _) = hybrid_search_by(|r| -dist(r, target), &cfg);
        // Brute force over every fine sample of every cuboid.
        let mut best = (f64::INFINITY, RotationAngles::zero());
        for m in 0..64 {
            for s in fine_samples(&cfg, m) {
                let d = dist(s, target);
                if d < best.0 {
                    best = (d, s);
                }
            }
        }
        assert_eq!(r, best.1);
    }

    #[test]
    fn neighbor_examples() {
        let cfg = GibbsConfig { neighbor_radius: 1, candidates_per_iter: 7, ..GibbsConfig::default() };
        let r = RotationAngles::new(0.0, 1.0, 2.0);
        let nb = gibbs_neighbors(r, &cfg);
        assert_eq!(nb.len(), 6);
        for c in &nb {
            let changed = c.as_array().iter().zip(r.as_array()).filter(|(a, b)| (*a - *b).abs() > 1e-15).count();
            assert_eq!(changed, 1);
        }
        assert_abs_diff_eq!(nb[1].alpha(), TAU - cfg.step(), epsilon = 1e-15);
        let cfg2 = GibbsConfig { neighbor_radius: 2, ..cfg };
        let nb2 = gibbs_neighbors(r, &cfg2);
        assert_eq!(nb2.len(), 12);
        for (i, a) in nb2.iter().enumerate() {
            for b in &nb2[i + 1..] {
                assert!(!same_angles(a, b));
            }
        }
    }

    #[test]
    fn probability_examples() {
        assert_eq!(selection_probabilities(&[0.3, 0.9, 0.1, 0.5], 0.0), vec![0.25; 4]);
        assert_eq!(selection_probabilities(&[2.0, 2.0], 3.0), vec![0.5, 0.5]);
        let p = selection_probabilities(&[1.0, 2.0], 1.0);
        let e = core::f64::consts::E;
        assert_abs_diff_eq!(p[0], e / (e + e * e), epsilon = 1e-15);
        assert_abs_diff_eq!(p[0], 0.2689414213699951, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.7310585786300049, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(gains in prop::collection::vec(-5.0f64..20.0, 1..40), mu in 0.0f64..50.0) {
            let p = selection_probabilities(&gains, mu);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&q| (0.0..=1.0).contains(&q)));
            let top = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(gains.iter().zip(&p).any(|(g, q)| *g == top && *q > 0.0));
        }

        #[test]
        fn inverse_cdf_in_range(p in prop::collection::vec(0.0f64..1.0, 1..10), u in 1e-12f64..=1.0) {
            let total: f64 = p.iter().sum();
            prop_assume!(total > 0.0);
            let probs: Vec<f64> = p.iter().map(|v| v / total).collect();
            let i = inverse_cdf(&probs, u);
            prop_assert!(i < probs.len() && probs[i] > 0.0);
        }
    }

    #[test]
    fn step_candidates_and_returned_angles() {
        let cfg = GibbsConfig::default();
        let mut rng = StreamRng::new(4, 0);
        let d = gibbs_step_by(RotationAngles::new(6.2, 0.0, 3.0), |r| r.alpha(), &cfg, 1.0, &mut rng);
        assert_eq!(d.candidates.len(), cfg.candidates_per_iter);
        assert!(d.candidates.iter().all(|r| r.as_array().iter().all(|a| (0.0..TAU).contains(a))));
    }

    #[test]
    fn refine_examples() {
        let objective = |r: RotationAngles| (r.alpha() - 1.0).cos() + (r.gamma() - 2.0).cos();
        let start = RotationAngles::new(3.0, 0.5, 0.5);
        let cfg0 = GibbsConfig { iters: 0, ..GibbsConfig::default() };
        let out = gibbs_refine_by(start, objective, &cfg0, &mut StreamRng::new(1, 0));
        assert_eq!(out.best, start);
        let cfg = GibbsConfig { iters: 20, seed: 9, ..GibbsConfig::default() };
        let a = gibbs_refine_by(start, objective, &cfg, &mut StreamRng::new(9, 1));
        let b = gibbs_refine_by(start, objective, &cfg, &mut StreamRng::new(9, 1));
        assert_eq!(a.best, b.best);
        assert_eq!(a.trace, b.trace);
        assert!(a.best_gain >= objective(start));
    }

    #[test]
    fn planted_neighbor_is_found() {
        // A sharp optimum one lattice step from the start, flat elsewhere.
        let cfg = GibbsConfig { iters: 1, temperature: Temperature::Fixed(50.0), ..GibbsConfig::default() };
        let start = RotationAngles::new(1.0, 2.0, 3.0);
        let peak = RotationAngles::new(1.0, 2.0 + cfg.step(), 3.0);
        let objective = |r: RotationAngles| if same_angles(&r, &peak) { 1.0 } else { 0.0 };
        let hits = (0..100u64)
            .filter(|&seed| {
                let out = gibbs_refine_by(start, objective, &cfg, &mut StreamRng::new(seed, streams::GIBBS));
                out.best == peak
            })
            .count();
        assert!(hits > 95, "{hits}");
    }

    #[test]
    fn refinement_never_loses_to_its_start() {
        let grid = build_grid([0.0, FRAC_PI_2], [0.0, FRAC_PI_2], [0.95e12, 1.05e12], [4, 4, 3]).unwrap();
        let pos: Vec<Position> =
            (0..4).map(|k| Position::new((k % 2) as f64 * LAMBDA / 2.0, (k / 2) as f64 * LAMBDA / 2.0)).collect();
        let layout = AntennaLayout::new(pos, LAMBDA, LAMBDA / 2.0).unwrap();
        let w = BeamWeights::from_phases(vec![0.0, 1.0, 2.0, 0.5]);
        let rcfg = RotationGridConfig { coarse_counts: [3, 3, 3], fine_counts: [2, 2, 2] };
        let r0 = hybrid_search(&w, &layout, &grid, &rcfg);
        let g0 = crate::gain::min_gain(&w, r0, &layout, &grid).unwrap();
        for seed in 0..5 {
            let cfg = GibbsConfig { iters: 10, seed, ..GibbsConfig::default() };
            let r = gibbs_refine(r0, &w, &layout, &grid, &cfg);
            assert!(crate::gain::min_gain(&w, r, &layout, &grid).unwrap() >= g0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(GibbsConfig { candidates_per_iter: 18, ..GibbsConfig::default() }.validate().is_err());
        assert!(GibbsConfig { temperature: Temperature::Fixed(-1.0), ..GibbsConfig::default() }.validate().is_err());
        assert!(GibbsConfig::default().validate().is_ok());
        assert!(RotationGridConfig { coarse_counts: [0, 1, 1], fine_counts: [1; 3] }.validate().is_err());
    }
}
