//! CSV and JSON artifacts.
//!
//! Numbers are rounded to 12 significant digits before printing, so reruns
//! are byte-identical and files stay readable. CSVs use LF line endings.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use sixdma_core::ao::{AOState, SchemeResult};
use sixdma_core::gain::{gain_field, BeamWeights, CoverageGrid};
use sixdma_core::geometry::{AntennaLayout, RotationAngles};
use sixdma_core::rotation::ChainRecord;
use sixdma_core::solver::IterateRecord;
use sixdma_core::to_db;

use crate::CliError;

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal text of `round12(x)`; scientific notation outside
/// `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let r = round12(x);
    let a = r.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) || !r.is_finite() {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn jnum(x: f64) -> Value {
    json!(round12(x))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

/// `theta_rad,phi_rad,freq_hz,gain_linear,gain_db`, one row per grid point in
/// grid order.
pub fn write_gain_field(
    path: &Path,
    w: &BeamWeights,
    r: RotationAngles,
    layout: &AntennaLayout,
    grid: &CoverageGrid,
) -> Result<(), CliError> {
    let field = gain_field(w, r, layout, grid)?;
    write_rows(
        path,
        &["theta_rad", "phi_rad", "freq_hz", "gain_linear", "gain_db"],
        grid.points().zip(&field.gains).map(|(p, &g)| [num(p.theta), num(p.phi), num(p.freq), num(g), num(to_db(g))]),
    )
}

/// `outer_iter,block,min_gain_linear,min_gain_db`.
pub fn write_trace(path: &Path, state: &AOState) -> Result<(), CliError> {
    write_rows(
        path,
        &["outer_iter", "block", "min_gain_linear", "min_gain_db"],
        state
            .trace
            .iter()
            .map(|r| [r.outer_iter.to_string(), r.block.label().to_string(), num(r.min_gain), num(to_db(r.min_gain))]),
    )
}

/// `iter,objective,primal_res,dual_res,gap`.
pub fn write_solver_log(path: &Path, log: &[IterateRecord]) -> Result<(), CliError> {
    write_rows(
        path,
        &["iter", "objective", "primal_res", "dual_res", "gap"],
        log.iter().map(|r| [r.iter.to_string(), num(r.objective), num(r.primal_res), num(r.dual_res), num(r.gap)]),
    )
}

/// `t,alpha,beta,gamma,min_gain,accepted_from`.
pub fn write_gibbs_trace(path: &Path, chain: &[ChainRecord]) -> Result<(), CliError> {
    write_rows(
        path,
        &["t", "alpha", "beta", "gamma", "min_gain", "accepted_from"],
        chain.iter().map(|c| {
            let [a, b, g] = c.rotation.as_array();
            [c.t.to_string(), num(a), num(b), num(g), num(c.min_gain), c.source.label().to_string()]
        }),
    )
}

/// `sweep_value,scheme,min_gain_db`.
pub fn write_sweep(path: &Path, rows: &[(f64, String, f64)]) -> Result<(), CliError> {
    write_rows(
        path,
        &["sweep_value", "scheme", "min_gain_db"],
        rows.iter().map(|(v, s, g)| [num(*v), s.clone(), num(to_db(*g))]),
    )
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    write_rows(path, header, rows.iter().map(|r| r.iter().map(|&v| num(v)).collect::<Vec<_>>()))
}

/// Weights, layout, rotation and score of one solution. Positions are local
/// `(y, z)` pairs in meters.
pub fn solution_json(
    name: &str,
    w: &BeamWeights,
    r: RotationAngles,
    layout: &AntennaLayout,
    min_gain: f64,
) -> serde_json::Map<String, Value> {
    let v = json!({
        "scheme": name,
        "min_gain_linear": jnum(min_gain),
        "min_gain_db": jnum(to_db(min_gain)),
        "weights_phase_rad": w.phases().iter().map(|&p| jnum(p)).collect::<Vec<_>>(),
        "positions_m": layout.positions().iter().map(|p| vec![jnum(p.y), jnum(p.z)]).collect::<Vec<_>>(),
        "rotation_rad": r.as_array().iter().map(|&a| jnum(a)).collect::<Vec<_>>(),
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// [`solution_json`] of an AO iterate plus its convergence flags.
pub fn ao_solution_json(name: &str, state: &AOState, min_gain: f64) -> Value {
    let mut m = solution_json(name, &state.weights, state.rotation, &state.layout, min_gain);
    m.insert("iterations_used".into(), json!(state.iterations_used));
    m.insert("converged".into(), json!(state.converged));
    m.insert("solver_failed".into(), json!(state.solver_failed));
    Value::Object(m)
}

pub fn summary_row(result: &SchemeResult) -> Value {
    json!({
        "scheme": result.scheme.name(),
        "min_gain_linear": jnum(result.min_gain),
        "min_gain_db": jnum(to_db(result.min_gain)),
        "iterations_used": result.state.iterations_used,
        "converged": result.state.converged,
        "solver_failed": result.state.solver_failed,
    })
}
