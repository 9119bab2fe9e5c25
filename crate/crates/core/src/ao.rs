//! Alternating optimization of weights, positions and rotation, and the
//! benchmark schemes built from subsets of those blocks.
//!
//! Every outer iteration runs the enabled blocks in the order weights,
//! positions, rotation. A block's output replaces the current iterate only if
//! the min gain on the optimization grid does not drop, so the recorded trace
//! is monotone by construction.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::Vector3;

use crate::gain::{array_response, build_grid, project, BeamWeights, CoverageGrid, GainEvaluator, GridPoint};
use crate::geometry::{direction_vector, AntennaLayout, Cell, Position, RotationAngles};
use crate::rng::{streams, StreamRng};
use crate::rotation::{gibbs_refine_by, hybrid_search_by, ChainRecord, GibbsConfig, RotationGridConfig};
use crate::sca::{beamforming_sca, position_sca, PenaltyConfig, PositionScaConfig};
use crate::solver::IterateRecord;
use crate::{Error, Result};

/// What is being optimized: the coverage grid and the array's movement limits.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: CoverageGrid,
    pub n_antennas: usize,
    pub min_spacing: f64,
    /// Half the side `A` of the square movement region.
    pub region_half_width: f64,
    pub carrier_hz: f64,
    /// Optional per-element movement cells; see [`AntennaLayout::with_cells`].
    pub cells: Option<Vec<Cell>>,
}

impl Problem {
    pub fn new(
        grid: CoverageGrid,
        n_antennas: usize,
        min_spacing: f64,
        region_half_width: f64,
        carrier_hz: f64,
    ) -> Self {
        Self { grid, n_antennas, min_spacing, region_half_width, carrier_hz, cells: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOConfig {
    pub max_outer_iters: usize,
    /// Relative min-gain improvement per outer iteration below which AO stops.
    pub outer_tol: f64,
    /// `None` uses [`PenaltyConfig::for_antennas`].
    pub penalty: Option<PenaltyConfig>,
    pub position: PositionScaConfig,
    pub rotation_grid: RotationGridConfig,
    pub gibbs: GibbsConfig,
    /// Re-steer the weights with each candidate rotation so the phase
    /// profile seen from the grid's angular centroid at the center frequency
    /// is unchanged. Without it, weights tuned to the current rotation make
    /// that rotation a trap for the search.
    pub resteer: bool,
    /// Keep interior-point iterates and Gibbs chains in the returned state.
    pub record_logs: bool,
    pub seed: u64,
}

impl Default for AOConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            outer_tol: 1e-3,
            penalty: None,
            // A few position steps per round: a layout refined to convergence
            // at the starting rotation is a poor start for the rotation block.
            position: PositionScaConfig { max_iters: 3, ..PositionScaConfig::default() },
            rotation_grid: RotationGridConfig::default(),
            gibbs: GibbsConfig::default(),
            resteer: true,
            record_logs: false,
            seed: 0,
        }
    }
}

impl AOConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0) || !(self.position.tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if let Some(p) = self.penalty {
            PenaltyConfig::new(p.rho, p.max_iters, p.tol)?;
        }
        self.rotation_grid.validate()?;
        self.gibbs.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Init,
    Weights,
    Positions,
    Rotation,
}

impl Block {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Init => "init",
            Self::Weights => "weights",
            Self::Positions => "positions",
            Self::Rotation => "rotation",
        }
    }
}

/// Min gain on the optimization grid after one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub outer_iter: usize,
    pub block: Block,
    pub min_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AOState {
    pub weights: BeamWeights,
    pub layout: AntennaLayout,
    pub rotation: RotationAngles,
    /// Optimization-grid min gain: the initial value, then one entry per
    /// outer iteration.
    pub min_gain_trace: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Set when a subproblem solver failed and its block was skipped.
    pub solver_failed: bool,
    /// Interior-point iterates of every subproblem, renumbered consecutively;
    /// empty unless [`AOConfig::record_logs`].
    pub solver_log: Vec<IterateRecord>,
    /// Gibbs chains of every rotation block, `t` counted across blocks;
    /// empty unless [`AOConfig::record_logs`].
    pub gibbs_trace: Vec<ChainRecord>,
}

impl AOState {
    fn fresh(weights: BeamWeights, layout: AntennaLayout, rotation: RotationAngles) -> Self {
        Self {
            weights,
            layout,
            rotation,
            min_gain_trace: Vec::new(),
            trace: Vec::new(),
            converged: false,
            iterations_used: 0,
            solver_failed: false,
            solver_log: Vec::new(),
            gibbs_trace: Vec::new(),
        }
    }

    /// Min gain of this iterate over `grid`.
    pub fn min_gain_on(&self, grid: &CoverageGrid) -> f64 {
        GainEvaluator::new(grid).min_gain(&self.weights, self.rotation, self.layout.positions())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    NarrowbandFpa,
    WidebandFpa,
    MovementOnly,
    RotationOnly,
    Proposed6dma,
    LinearMa,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        Self::NarrowbandFpa,
        Self::WidebandFpa,
        Self::MovementOnly,
        Self::RotationOnly,
        Self::Proposed6dma,
        Self::LinearMa,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::NarrowbandFpa => "narrowband_fpa",
            Self::WidebandFpa => "wideband_fpa",
            Self::MovementOnly => "movement_only",
            Self::RotationOnly => "rotation_only",
            Self::Proposed6dma => "proposed_6dma",
            Self::LinearMa => "linear_ma",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    fn blocks(&self) -> Blocks {
        match self {
            Self::NarrowbandFpa | Self::WidebandFpa => Blocks { positions: false, rotation: false, fix_z: false },
            Self::MovementOnly => Blocks { positions: true, rotation: false, fix_z: false },
            Self::RotationOnly => Blocks { positions: false, rotation: true, fix_z: false },
            Self::Proposed6dma => Blocks { positions: true, rotation: true, fix_z: false },
            Self::LinearMa => Blocks { positions: true, rotation: true, fix_z: true },
        }
    }
}

/// Which blocks run after the weights.
#[derive(Debug, Clone, Copy)]
struct Blocks {
    positions: bool,
    rotation: bool,
    fix_z: bool,
}

/// Positions of a near-square UPA: `⌈√N⌉` columns at `pitch`, rows filled in
/// order, the full bounding grid centered on the origin.
fn upa_positions(n: usize, pitch: f64) -> Vec<Position> {
    let cols = (1..=n).find(|c| c * c >= n).unwrap_or(1);
    let rows = n.div_ceil(cols);
    let y0 = 0.5 * (cols - 1) as f64 * pitch;
    let z0 = 0.5 * (rows - 1) as f64 * pitch;
    (0..n).map(|k| Position::new((k % cols) as f64 * pitch - y0, (k / cols) as f64 * pitch - z0)).collect()
}

/// Splits the `2h × 2h` region into a near-square grid of equal cells, one
/// per element, in the same order as the initial UPA.
pub fn uniform_cells(n: usize, half_width: f64) -> Vec<Cell> {
    let cols = (1..=n).find(|c| c * c >= n).unwrap_or(1);
    let rows = n.div_ceil(cols);
    let (wy, wz) = (2.0 * half_width / cols as f64, 2.0 * half_width / rows as f64);
    (0..n)
        .map(|k| {
            let (c, r) = ((k % cols) as f64, (k / cols) as f64);
            Cell {
                y_min: -half_width + c * wy,
                y_max: -half_width + (c + 1.0) * wy,
                z_min: -half_width + r * wz,
                z_max: -half_width + (r + 1.0) * wz,
            }
        })
        .collect()
}

fn ula_positions(n: usize, pitch: f64) -> Vec<Position> {
    let y0 = 0.5 * (n - 1) as f64 * pitch;
    (0..n).map(|k| Position::new(k as f64 * pitch - y0, 0.0)).collect()
}

/// Starting point of a scheme: a near-square UPA (a line along `y` for
/// [`SchemeId::LinearMa`]) at `d_min` pitch, or the cell centers when cells
/// are set; zero rotation; the beam matched to the angular centroid of the
/// grid at the carrier.
pub fn initialize(problem: &Problem, scheme: SchemeId) -> Result<AOState> {
    let n = problem.n_antennas;
    if n == 0 {
        return Err(Error::InfeasibleGeometry("no antennas".into()));
    }
    let positions = match (&problem.cells, scheme) {
        (Some(cells), _) => {
            if cells.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: cells.len() });
            }
            cells.iter().map(|c| Position::new(0.5 * (c.y_min + c.y_max), 0.5 * (c.z_min + c.z_max))).collect()
        }
        (None, SchemeId::LinearMa) => ula_positions(n, problem.min_spacing),
        (None, _) => upa_positions(n, problem.min_spacing),
    };
    let mut layout =
        AntennaLayout::new(positions, problem.region_half_width, problem.min_spacing).map_err(|e| match e {
            Error::InfeasibleGeometry(msg) => Error::InfeasibleGeometry(format!("initial array does not fit: {msg}")),
            other => other,
        })?;
    if let Some(cells) = &problem.cells {
        layout = layout.with_cells(cells.clone())?;
    }
    let (theta, phi) = problem.grid.angular_centroid();
    let r = RotationAngles::zero();
    let a = array_response(problem.carrier_hz, &direction_vector(theta, phi), r, &layout)?;
    Ok(AOState::fresh(BeamWeights::matched(&a), layout, r))
}

/// Full AO: weights, positions and rotation.
pub fn ao_solve(problem: &Problem, init: AOState, cfg: &AOConfig) -> Result<AOState> {
    alternate(&problem.grid, init, cfg, Blocks { positions: true, rotation: true, fix_z: false })
}

fn alternate(grid: &CoverageGrid, init: AOState, cfg: &AOConfig, blocks: Blocks) -> Result<AOState> {
    cfg.validate()?;
    let eval = GainEvaluator::new(grid);
    let n = init.layout.n_antennas();
    if init.weights.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: init.weights.len() });
    }
    let penalty = cfg.penalty.unwrap_or_else(|| PenaltyConfig::for_antennas(n));
    let pos_cfg = PositionScaConfig { fix_z: blocks.fix_z || cfg.position.fix_z, ..cfg.position };

    let mut s = AOState::fresh(init.weights, init.layout, init.rotation);
    let mut g = eval.min_gain(&s.weights, s.rotation, s.layout.positions());
    s.min_gain_trace.push(g);
    s.trace.push(TraceRow { outer_iter: 0, block: Block::Init, min_gain: g });

    for j in 1..=cfg.max_outer_iters {
        let g_start = g;
        let stream = j as u64;

        let responses = eval.responses(s.rotation, s.layout.positions());
        let mut rng = StreamRng::new(cfg.seed, streams::BEAM_PRUNE + stream);
        match beamforming_sca(&responses, &s.weights, &penalty, &mut rng) {
            Ok(out) => {
                if cfg.record_logs {
                    append_log(&mut s.solver_log, &out.solver_log);
                }
                if out.min_gain >= g {
                    s.weights = out.weights;
                    g = out.min_gain;
                }
            }
            Err(_) => s.solver_failed = true,
        }
        s.trace.push(TraceRow { outer_iter: j, block: Block::Weights, min_gain: g });

        if blocks.positions {
            let mut rng = StreamRng::new(cfg.seed, streams::POSITION_PRUNE + stream);
            match position_sca(&eval.projections(s.rotation), &s.weights, &s.layout, &pos_cfg, &mut rng) {
                Ok(out) => {
                    if cfg.record_logs {
                        append_log(&mut s.solver_log, &out.solver_log);
                    }
                    s.solver_failed |= out.solver_failed;
                    if out.min_gain >= g {
                        s.layout = out.layout;
                        g = out.min_gain;
                    }
                }
                Err(_) => s.solver_failed = true,
            }
            s.trace.push(TraceRow { outer_iter: j, block: Block::Positions, min_gain: g });
        }

        if blocks.rotation {
            let (theta, phi) = grid.angular_centroid();
            let anchor = GridPoint { theta, phi, freq: grid.center_frequency() }.wavevector();
            let weights_at = |r: RotationAngles| {
                if cfg.resteer {
                    resteer(&s.weights, &anchor, s.rotation, r, s.layout.positions())
                } else {
                    s.weights.clone()
                }
            };
            let objective = |r: RotationAngles| eval.min_gain(&weights_at(r), r, s.layout.positions());
            let (r_grid, g_grid) = hybrid_search_by(objective, &cfg.rotation_grid);
            // The chain starts from the better of the grid optimum and the
            // current rotation.
            let start = if g_grid >= g { r_grid } else { s.rotation };
            let mut rng = StreamRng::new(cfg.seed, streams::GIBBS + stream);
            let out = gibbs_refine_by(start, objective, &cfg.gibbs, &mut rng);
            if cfg.record_logs {
                let offset = s.gibbs_trace.len();
                s.gibbs_trace.extend(out.trace.iter().map(|c| ChainRecord { t: offset + c.t, ..*c }));
            }
            if out.best_gain >= g {
                s.weights = weights_at(out.best);
                s.rotation = out.best;
                g = out.best_gain;
            }
            s.trace.push(TraceRow { outer_iter: j, block: Block::Rotation, min_gain: g });
        }

        s.min_gain_trace.push(g);
        s.iterations_used = j;
        debug_assert!(s.layout.admits(s.layout.positions()));
        if g - g_start < cfg.outer_tol * g_start.abs().max(1e-12) {
            s.converged = true;
            break;
        }
    }
    Ok(s)
}

fn append_log(log: &mut Vec<IterateRecord>, more: &[IterateRecord]) {
    let offset = log.len();
    log.extend(more.iter().enumerate().map(|(i, r)| IterateRecord { iter: offset + i, ..*r }));
}

/// `w` with phases shifted so that every element keeps its phase relative to
/// a plane wave with wavevector `kv` when the array turns from `from` to `to`.
fn resteer(
    w: &BeamWeights,
    kv: &Vector3<f64>,
    from: RotationAngles,
    to: RotationAngles,
    positions: &[Position],
) -> BeamWeights {
    let (a, b) = (project(kv, from), project(kv, to));
    BeamWeights::from_phases(w.phases().iter().zip(positions).map(|(ph, p)| ph + b.phase(p) - a.phase(p)).collect())
}

/// Outcome of one benchmark scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub scheme: SchemeId,
    pub state: AOState,
    /// Min gain over the full wideband grid, whatever grid was optimized.
    pub min_gain: f64,
}

/// The coverage grid collapsed to the carrier frequency.
pub fn carrier_grid(problem: &Problem) -> Result<CoverageGrid> {
    let g = &problem.grid;
    let [l1, l2, _] = g.counts();
    build_grid(g.theta_range(), g.phi_range(), [problem.carrier_hz, problem.carrier_hz], [l1, l2, 1])
}

/// Runs `scheme` from [`initialize`] and scores it on the full grid.
pub fn run_scheme(scheme: SchemeId, problem: &Problem, cfg: &AOConfig) -> Result<SchemeResult> {
    let init = initialize(problem, scheme)?;
    run_scheme_from(scheme, problem, init, cfg)
}

/// [`run_scheme`] from a given starting point.
pub fn run_scheme_from(scheme: SchemeId, problem: &Problem, init: AOState, cfg: &AOConfig) -> Result<SchemeResult> {
    let state = match scheme {
        SchemeId::NarrowbandFpa => alternate(&carrier_grid(problem)?, init, cfg, scheme.blocks())?,
        _ => alternate(&problem.grid, init, cfg, scheme.blocks())?,
    };
    let min_gain = state.min_gain_on(&problem.grid);
    Ok(SchemeResult { scheme, state, min_gain })
}
