//! Experiment drivers behind the CLI subcommands.

use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde_json::{json, Value};
use sixdma_core::ao::{run_scheme, AOConfig, Problem, SchemeId, SchemeResult};
use sixdma_core::closed_form::{diagnose_ula_2d, diagnose_upa_1d, solve_1d};
use sixdma_core::geometry::{rotation_matrix, RotationAngles};
use sixdma_core::rng::{streams, StreamRng};
use sixdma_core::to_db;

use crate::config::{ExperimentConfig, Mode};
use crate::output::{self, num, round12};
use crate::CliError;

/// Min gain (linear, full grid) of every scheme that ran.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub gains: Vec<(String, f64)>,
    /// Some scheme skipped a block because its subproblem solver failed.
    pub solver_failed: bool,
}

impl RunOutcome {
    pub fn gain(&self, scheme: &str) -> Option<f64> {
        self.gains.iter().find(|(s, _)| s == scheme).map(|&(_, g)| g)
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn worker_count(requested: usize, jobs: usize) -> usize {
    let n = if requested == 0 { thread::available_parallelism().map(|n| n.get()).unwrap_or(1) } else { requested };
    n.clamp(1, jobs.max(1))
}

fn write_scheme(dir: &Path, res: &SchemeResult, problem: &Problem, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let name = res.scheme.name();
    let s = &res.state;
    output::write_gain_field(
        &dir.join(format!("{name}_gainfield.csv")),
        &s.weights,
        s.rotation,
        &s.layout,
        &problem.grid,
    )?;
    output::write_trace(&dir.join(format!("{name}_trace.csv")), s)?;
    output::write_json(&dir.join(format!("{name}_solution.json")), &output::ao_solution_json(name, s, res.min_gain))?;
    if cfg.write_solver_log {
        output::write_solver_log(&dir.join(format!("{name}_solver_log.csv")), &s.solver_log)?;
    }
    if cfg.write_gibbs_trace && !s.gibbs_trace.is_empty() {
        output::write_gibbs_trace(&dir.join(format!("{name}_gibbs_trace.csv")), &s.gibbs_trace)?;
    }
    Ok(())
}

/// Runs `schemes` on up to `workers` threads. Each worker writes its own
/// scheme's files; results come back in `schemes` order.
fn run_schemes(
    schemes: &[SchemeId],
    problem: &Problem,
    ao: &AOConfig,
    cfg: &ExperimentConfig,
    dir: &Path,
) -> Vec<Result<SchemeResult, CliError>> {
    let slots: Vec<Mutex<Option<Result<SchemeResult, CliError>>>> = schemes.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    thread::scope(|scope| {
        for _ in 0..worker_count(cfg.workers, schemes.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&scheme) = schemes.get(i) else { break };
                let res = run_scheme(scheme, problem, ao).map_err(CliError::from).and_then(|r| {
                    write_scheme(dir, &r, problem, cfg)?;
                    Ok(r)
                });
                *slots[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(res);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every slot is filled"))
        .collect()
}

fn summary(cfg: &ExperimentConfig, rows: Vec<Value>, gains: &[(String, f64)]) -> Value {
    let best = gains.iter().fold(None::<&(String, f64)>, |b, x| match b {
        Some(b) if b.1 >= x.1 => Some(b),
        _ => Some(x),
    });
    json!({
        "mode": cfg.mode,
        "seed": cfg.seed,
        "carrier_hz": round12(cfg.carrier_hz),
        "bandwidth_hz": round12(cfg.bandwidth_hz),
        "n_antennas": cfg.n_antennas,
        "theta_deg_range": cfg.theta_deg_range.map(round12),
        "phi_deg_range": cfg.phi_deg_range.map(round12),
        "grid_counts": cfg.grid().map(|g| g.counts()).unwrap_or(cfg.grid_counts),
        "schemes": rows,
        "best_scheme": best.map(|b| b.0.clone()),
        "best_min_gain_db": best.map(|b| round12(to_db(b.1))),
    })
}

/// Runs every configured scheme (or the closed-form solution) and writes all
/// artifacts plus `summary.json` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    create_dir(&dir)?;
    match cfg.mode {
        Mode::ClosedForm => run_closed_form(cfg, &dir),
        Mode::Ao => {
            let problem = cfg.problem()?;
            let ao = cfg.ao_config();
            ao.validate()?;
            let schemes = cfg.scheme_ids();
            let mut gains = Vec::new();
            let mut rows = Vec::new();
            let mut solver_failed = false;
            let mut first_err = None;
            for res in run_schemes(&schemes, &problem, &ao, cfg, &dir) {
                match res {
                    Ok(r) => {
                        solver_failed |= r.state.solver_failed;
                        rows.push(output::summary_row(&r));
                        gains.push((r.scheme.name().to_string(), r.min_gain));
                    }
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_err {
                return Err(e);
            }
            output::write_json(&dir.join("summary.json"), &summary(cfg, rows, &gains))?;
            Ok(RunOutcome { gains, solver_failed })
        }
    }
}

fn run_closed_form(cfg: &ExperimentConfig, dir: &Path) -> Result<RunOutcome, CliError> {
    let problem = cfg.problem()?;
    let phi0 = cfg.phi_deg_range[0].to_radians();
    let sol = solve_1d(phi0, problem.n_antennas, problem.min_spacing, problem.region_half_width)?;
    let field = sixdma_core::gain::gain_field(&sol.weights, sol.rotation, &sol.layout, &problem.grid)?;
    let name = "closed_form";
    output::write_gain_field(
        &dir.join(format!("{name}_gainfield.csv")),
        &sol.weights,
        sol.rotation,
        &sol.layout,
        &problem.grid,
    )?;
    let solution = output::solution_json(name, &sol.weights, sol.rotation, &sol.layout, field.min_gain);
    output::write_json(&dir.join(format!("{name}_solution.json")), &Value::Object(solution))?;
    let row = json!({
        "scheme": name,
        "min_gain_linear": round12(field.min_gain),
        "min_gain_db": round12(to_db(field.min_gain)),
        "max_gain_linear": round12(field.gains.iter().copied().fold(f64::MIN, f64::max)),
    });
    let gains = vec![(name.to_string(), field.min_gain)];
    output::write_json(&dir.join("summary.json"), &summary(cfg, vec![row], &gains))?;
    Ok(RunOutcome { gains, solver_failed: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    BandwidthHz,
    /// Azimuth range `[φ_min, φ_min + w]` with `φ_min` from the config.
    PhiWidthDeg,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BandwidthHz => "bandwidth_hz",
            Self::PhiWidthDeg => "phi_width_deg",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, CliError> {
        match name {
            "bandwidth_hz" => Ok(Self::BandwidthHz),
            "phi_width_deg" => Ok(Self::PhiWidthDeg),
            _ => Err(CliError::Config(format!(
                "param: unknown sweep parameter {name:?}; expected bandwidth_hz or phi_width_deg"
            ))),
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig, value: f64) {
        match self {
            Self::BandwidthHz => cfg.bandwidth_hz = value,
            Self::PhiWidthDeg => cfg.phi_deg_range[1] = cfg.phi_deg_range[0] + value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub outcome: RunOutcome,
}

/// Directory of one sweep value under the sweep's output directory.
pub fn sweep_value_dir(root: &Path, param: SweepParam, value: f64) -> PathBuf {
    root.join(format!("{}_{}", param.name(), num(value)))
}

/// Runs the experiment once per value, each into its own subdirectory, and
/// writes `sweep.csv` with one `sweep_value,scheme,min_gain_db` row per pair.
pub fn run_sweep(cfg: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("values: at least one sweep value is required".into()));
    }
    create_dir(&cfg.output_dir)?;
    let mut points = Vec::with_capacity(values.len());
    let mut rows = Vec::new();
    for &value in values {
        let mut c = cfg.clone();
        param.apply(&mut c, value);
        c.output_dir = sweep_value_dir(&cfg.output_dir, param, value);
        c.validate().map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{} = {}: {m}", param.name(), num(value))),
            other => other,
        })?;
        let outcome = run_experiment(&c)?;
        rows.extend(outcome.gains.iter().map(|(s, g)| (value, s.clone(), *g)));
        points.push(SweepPoint { value, outcome });
    }
    output::write_sweep(&cfg.output_dir.join("sweep.csv"), &rows)?;
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnoseMode {
    /// Line array over the configured 2D angular region.
    Ula2d,
    /// Planar array over the elevation cut at `phi_deg_range[0]`.
    Upa1d,
}

impl DiagnoseMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ula2d => "ula2d",
            Self::Upa1d => "upa1d",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseReport {
    /// Per rotation: angles, the squint metric, and `s1ᵀs2`.
    pub rows: Vec<Vec<f64>>,
    /// Smallest squint metric over all rotations.
    pub min_metric: f64,
    pub max_abs_s1_dot_s2: f64,
}

/// `count` rotations uniform on `(0, 2π]³`, drawn from the diagnostics stream.
pub fn random_rotations(count: usize, seed: u64) -> Vec<RotationAngles> {
    let mut rng = StreamRng::new(seed, streams::DIAGNOSTICS);
    (0..count)
        .map(|_| {
            let a = TAU * rng.uniform_open_closed();
            let b = TAU * rng.uniform_open_closed();
            let g = TAU * rng.uniform_open_closed();
            RotationAngles::new(a, b, g)
        })
        .collect()
}

/// Evaluates the no-squint-cancellation certificate over random rotations.
pub fn diagnose(
    cfg: &ExperimentConfig,
    mode: DiagnoseMode,
    count: usize,
    seed: u64,
) -> Result<DiagnoseReport, CliError> {
    let grid = cfg.grid()?;
    let phi0 = cfg.phi_deg_range[0].to_radians();
    let mut rows = Vec::with_capacity(count);
    let mut min_metric = f64::INFINITY;
    let mut max_dot: f64 = 0.0;
    for r in random_rotations(count, seed) {
        let m = rotation_matrix(r);
        let dot = m.s1().dot(&m.s2());
        let [a, b, g] = r.as_array();
        let row = match mode {
            DiagnoseMode::Ula2d => {
                let res = diagnose_ula_2d(r, &grid)?;
                min_metric = min_metric.min(res);
                vec![a, b, g, res, dot]
            }
            DiagnoseMode::Upa1d => {
                let (g1, g2) = diagnose_upa_1d(r, phi0, grid.thetas())?;
                min_metric = min_metric.min(g1.max(g2));
                vec![a, b, g, g1, g2, dot]
            }
        };
        max_dot = max_dot.max(dot.abs());
        rows.push(row);
    }
    Ok(DiagnoseReport { rows, min_metric, max_abs_s1_dot_s2: max_dot })
}

/// [`diagnose`] plus `diagnose_<mode>.csv` in `cfg.output_dir`.
pub fn run_diagnose(
    cfg: &ExperimentConfig,
    mode: DiagnoseMode,
    count: usize,
    seed: u64,
) -> Result<DiagnoseReport, CliError> {
    let report = diagnose(cfg, mode, count, seed)?;
    create_dir(&cfg.output_dir)?;
    let header: &[&str] = match mode {
        DiagnoseMode::Ula2d => &["alpha", "beta", "gamma", "residual", "s1_dot_s2"],
        DiagnoseMode::Upa1d => &["alpha", "beta", "gamma", "g1_max", "g2_max", "s1_dot_s2"],
    };
    output::write_table(&cfg.output_dir.join(format!("diagnose_{}.csv", mode.name())), header, &report.rows)?;
    Ok(report)
}
