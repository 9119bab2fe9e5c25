//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so every line is printed as it
//! completes. Criterion 8 dominates the runtime (five full-grid runs of all
//! schemes).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use sixdma::config::ExperimentConfig;
use sixdma::experiment::{random_rotations, run_experiment, run_sweep, RunOutcome, SweepParam};
use sixdma_core::ao::{initialize, run_scheme, uniform_cells, AOConfig, Problem, SchemeId};
use sixdma_core::closed_form::{diagnose_ula_2d, diagnose_upa_1d, solve_1d};
use sixdma_core::gain::{
    array_response, beam_gain, build_grid, gain_field, min_gain, BeamWeights, CoverageGrid, GridPoint,
};
use sixdma_core::geometry::{direction_vector, rotation_matrix, AntennaLayout, Position, RotationAngles};
use sixdma_core::rng::StreamRng;
use sixdma_core::rotation::{gibbs_refine, hybrid_search, GibbsConfig, RotationGridConfig};
use sixdma_core::sca::{
    build_position_surrogate, penalty_majorant, rank_one_penalty, solve_beamforming_step, solve_position_step,
    HermitianLift, PenaltyConfig, PositionStepOptions,
};
use sixdma_core::{to_db, wavelength};
use tempfile::TempDir;

const FC: f64 = 1e12;
const DEG: f64 = std::f64::consts::PI / 180.0;

fn lambda() -> f64 {
    wavelength(FC)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn check(n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    let dt = t.elapsed();
    let in_time = limit.is_none_or(|l| dt < l);
    let pass = v.pass && in_time;
    let budget = limit.map(|l| format!(", limit {} s", l.as_secs_f64())).unwrap_or_default();
    println!(
        "criterion {n} {}: {name}: {} ({:.2} s{budget})",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        dt.as_secs_f64()
    );
    pass
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform_open_closed()
}

fn random_point(rng: &mut StreamRng) -> GridPoint {
    GridPoint {
        theta: uniform(rng, 0.0, FRAC_PI_2),
        phi: uniform(rng, 0.0, FRAC_PI_2),
        freq: uniform(rng, 0.95e12, 1.05e12),
    }
}

fn random_rotation(rng: &mut StreamRng) -> RotationAngles {
    RotationAngles::new(uniform(rng, 0.0, TAU), uniform(rng, 0.0, TAU), uniform(rng, 0.0, TAU))
}

fn random_weights(rng: &mut StreamRng, n: usize) -> BeamWeights {
    BeamWeights::from_phases((0..n).map(|_| uniform(rng, -3.2, 3.2)).collect())
}

/// Uniform positions in the `2h × 2h` square with pairwise spacing at least
/// `dmin`, by rejection.
fn random_layout(rng: &mut StreamRng, n: usize, half: f64, dmin: f64) -> AntennaLayout {
    loop {
        let pos: Vec<Position> =
            (0..n).map(|_| Position::new(uniform(rng, -half, half), uniform(rng, -half, half))).collect();
        if let Ok(layout) = AntennaLayout::new(pos, half, dmin) {
            return layout;
        }
    }
}

fn point_gain(w: &BeamWeights, r: RotationAngles, layout: &AntennaLayout, p: &GridPoint) -> f64 {
    let a = array_response(p.freq, &direction_vector(p.theta, p.phi), r, layout).unwrap();
    beam_gain(w, &a).unwrap()
}

fn criterion_1() -> Verdict {
    let l = lambda();
    let sol = solve_1d(0.0, 16, l / 2.0, 4.0 * l).unwrap();
    let grid = build_grid([30.0 * DEG, 90.0 * DEG], [0.0, 0.0], [0.95e12, 1.05e12], [64, 1, 64]).unwrap();
    let field = gain_field(&sol.weights, sol.rotation, &sol.layout, &grid).unwrap();
    let err = field.gains.iter().map(|g| (g - 16.0).abs() / 16.0).fold(0.0, f64::max);
    verdict(
        err <= 1e-9 && field.gains.len() == 64 * 64,
        format!("max relative error {err:e} from 16 over {} points", field.gains.len()),
    )
}

fn criterion_2() -> Verdict {
    let l = lambda();
    let half = 4.0 * l;
    let grid = build_grid([30.0 * DEG, 90.0 * DEG], [0.0, 0.0], [0.95e12, 1.05e12], [16, 1, 8]).unwrap();
    let fine = build_grid([30.0 * DEG, 90.0 * DEG], [0.0, 0.0], [0.95e12, 1.05e12], [64, 1, 64]).unwrap();
    let mut problem = Problem::new(grid, 16, l / 2.0, half, FC);
    problem.cells = Some(uniform_cells(16, half));
    let res = run_scheme(SchemeId::Proposed6dma, &problem, &AOConfig::default()).unwrap();
    let g = to_db(res.state.min_gain_on(&fine));
    let gap = to_db(16.0) - g;
    verdict(gap >= 3.0, format!("planar array min gain {g:.3} dB, {gap:.3} dB below the line array"))
}

fn criterion_3() -> Verdict {
    let grid = build_grid([0.0, FRAC_PI_2], [0.0, FRAC_PI_2], [FC, FC], [16, 16, 1]).unwrap();
    let thetas: Vec<f64> = (0..64).map(|i| (30.0 + 60.0 * i as f64 / 63.0) * DEG).collect();
    let (mut ula, mut upa, mut ortho) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let rotations = random_rotations(1000, 0);
    for &r in &rotations {
        ula = ula.min(diagnose_ula_2d(r, &grid).unwrap());
        let (g1, g2) = diagnose_upa_1d(r, 0.0, &thetas).unwrap();
        upa = upa.min(g1.max(g2));
        let m = rotation_matrix(r);
        ortho = ortho.max(m.s1().dot(&m.s2()).abs());
    }
    verdict(
        rotations.len() == 1000 && ula > 1e-6 && upa > 1e-6 && ortho <= 1e-12,
        format!("min line-array residual {ula:.4e}, min planar max(|g1|,|g2|) {upa:.4e}, max |s1.s2| {ortho:.1e}"),
    )
}

fn random_hermitian(rng: &mut StreamRng, n: usize, psd: bool) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(n, n, |_, _| Complex64::new(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)));
    if psd {
        &m * m.adjoint()
    } else {
        (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

fn criterion_4() -> Verdict {
    let mut rng = StreamRng::new(4, 0);
    let (mut worst_bound, mut worst_touch) = (f64::NEG_INFINITY, 0.0f64);
    for k in 0..100 {
        let n = 1 + rng.below(8);
        let w = HermitianLift::new(random_hermitian(&mut rng, n, k % 2 == 1)).unwrap();
        let w0 = HermitianLift::new(random_hermitian(&mut rng, n, k % 3 != 0)).unwrap();
        worst_bound = worst_bound.max(rank_one_penalty(&w) - penalty_majorant(&w, &w0));
        worst_touch = worst_touch.max((penalty_majorant(&w0, &w0) - rank_one_penalty(&w0)).abs());
    }

    let l = lambda();
    let half = 2.0 * l;
    let (mut worst_minorant, mut worst_equal) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..20 {
        let base = random_layout(&mut rng, 9, half, l / 2.0);
        let w = random_weights(&mut rng, 9);
        let r = random_rotation(&mut rng);
        let p = random_point(&mut rng);
        let s = build_position_surrogate(&p, r, &w, &base).unwrap();
        worst_equal = worst_equal.max((s.value(base.positions()) - point_gain(&w, r, &base, &p)).abs());
        for _ in 0..200 {
            let trial = random_layout(&mut rng, 9, half, 0.0);
            worst_minorant = worst_minorant.max(s.value(trial.positions()) - point_gain(&w, r, &trial, &p));
        }
    }
    verdict(
        worst_bound <= 0.0 && worst_touch <= 1e-8 && worst_minorant <= 1e-8 && worst_equal <= 1e-8,
        format!(
            "(a) max f - majorant {worst_bound:.2e}, touch error {worst_touch:.2e}; \
             (b) max surrogate - gain {worst_minorant:.2e} over 4000 layouts, touch error {worst_equal:.2e}"
        ),
    )
}

fn criterion_5() -> Verdict {
    let l = lambda();
    let half = 2.0 * l;
    let mut rng = StreamRng::new(5, 0);
    let (mut sdp_primal, mut sdp_comp, mut sdp_dual, mut sdp_unconverged) = (0.0f64, 0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let n = 2 + rng.below(15);
        let m = 1 + rng.below(256 - n);
        let layout = random_layout(&mut rng, n, half, 0.0);
        let r = random_rotation(&mut rng);
        let cuts: Vec<Vec<Complex64>> = (0..m)
            .map(|_| {
                let p = random_point(&mut rng);
                array_response(p.freq, &p.direction(), r, &layout).unwrap()
            })
            .collect();
        let prev = HermitianLift::from_weights(&random_weights(&mut rng, n));
        let step = solve_beamforming_step(&cuts, &prev, &PenaltyConfig::for_antennas(n)).unwrap();
        sdp_primal = sdp_primal.max(step.kkt.primal_residual);
        sdp_comp = sdp_comp.max(step.kkt.complementarity);
        sdp_dual = sdp_dual.max(step.kkt.dual_residual);
        sdp_unconverged += usize::from(!step.converged);
    }

    let (mut q_primal, mut q_comp, mut q_dual, mut q_bad) = (0.0f64, 0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let n = 2 + rng.below(8);
        let layout = random_layout(&mut rng, n, half, l / 2.0);
        let w = random_weights(&mut rng, n);
        let r = random_rotation(&mut rng);
        let m = 1 + rng.below(64);
        let surrogates: Vec<_> =
            (0..m).map(|_| build_position_surrogate(&random_point(&mut rng), r, &w, &layout).unwrap()).collect();
        let step = solve_position_step(&surrogates, &layout, &PositionStepOptions::default()).unwrap();
        q_bad += usize::from(step.solver_failed || !step.moved);
        q_primal = q_primal.max(step.kkt.primal_residual);
        q_comp = q_comp.max(step.kkt.complementarity);
        q_dual = q_dual.max(step.kkt.dual_residual);
    }

    // N = 2, one point: the lift is tight, so the penalized optimum is the best
    // rank-one value over the free relative phase.
    let mut oracle_err = 0.0f64;
    for _ in 0..10 {
        let a = vec![
            Complex64::from_polar(1.0, uniform(&mut rng, 0.0, TAU)),
            Complex64::from_polar(1.0, uniform(&mut rng, 0.0, TAU)),
        ];
        let prev_w = random_weights(&mut rng, 2);
        let cfg = PenaltyConfig::for_antennas(2);
        let s = prev_w.complex();
        let mut oracle = f64::NEG_INFINITY;
        for k in 0..(TAU / 1e-3) as usize {
            let w = BeamWeights::from_phases(vec![0.0, k as f64 * 1e-3]);
            let proj: Complex64 = s.iter().zip(w.complex()).map(|(x, y)| x.conj() * y).sum();
            oracle = oracle.max(beam_gain(&w, &a).unwrap() - cfg.rho * (1.0 - proj.norm_sqr()));
        }
        let step = solve_beamforming_step(&[a], &HermitianLift::from_weights(&prev_w), &cfg).unwrap();
        oracle_err = oracle_err.max((step.objective - oracle).abs());
    }

    let pass = sdp_primal <= 1e-8
        && sdp_comp <= 1e-6
        && sdp_dual <= 1e-6
        && sdp_unconverged == 0
        && q_bad == 0
        && q_primal <= 1e-8
        && q_comp <= 1e-6
        && q_dual <= 1e-6
        && oracle_err <= 1e-3;
    verdict(
        pass,
        format!(
            "SDP max primal {sdp_primal:.1e} dual {sdp_dual:.1e} gap {sdp_comp:.1e} unconverged {sdp_unconverged}; \
             QCQP max primal {q_primal:.1e} dual {q_dual:.1e} gap {q_comp:.1e} failed {q_bad}; \
             N=2 oracle error {oracle_err:.1e}"
        ),
    )
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn desk_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        grid_counts: [8, 8, 5],
        output_dir: out.to_path_buf(),
        workers: 1,
        ..ExperimentConfig::default()
    }
}

/// Worst decrease between consecutive `min_gain_linear` rows of a trace CSV.
fn worst_trace_drop(bytes: &[u8]) -> f64 {
    let mut rd = csv::Reader::from_reader(bytes);
    let col = rd.headers().unwrap().iter().position(|h| h == "min_gain_linear").unwrap();
    let gains: Vec<f64> = rd.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    gains.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max)
}

fn criterion_6(tmp: &Path, desk: &mut Option<RunOutcome>) -> Verdict {
    let t = Instant::now();
    let a = run_experiment(&desk_config(&tmp.join("desk_a"))).unwrap();
    let first = t.elapsed();
    let b = run_experiment(&desk_config(&tmp.join("desk_b"))).unwrap();
    let (fa, fb) = (read_dir(&tmp.join("desk_a")), read_dir(&tmp.join("desk_b")));
    let identical = fa == fb && a == b;
    let mut worst = (f64::NEG_INFINITY, String::new());
    for s in SchemeId::ALL {
        let d = worst_trace_drop(&fa[&format!("{}_trace.csv", s.name())]);
        if d > worst.0 {
            worst = (d, s.name().to_string());
        }
    }
    *desk = Some(a);
    verdict(
        identical && worst.0 <= 1e-6 && first < Duration::from_secs(600),
        format!(
            "{} files byte-identical across reruns: {identical}; worst trace decrease {:.2e} ({}); one run of all schemes {:.1} s",
            fa.len(),
            worst.0,
            worst.1,
            first.as_secs_f64()
        ),
    )
}

fn criterion_7(desk: Option<&RunOutcome>) -> Verdict {
    let Some(desk) = desk else {
        return verdict(false, "desk run unavailable".into());
    };
    let db = |s: SchemeId| to_db(desk.gain(s.name()).unwrap());
    let order = [
        SchemeId::Proposed6dma,
        SchemeId::RotationOnly,
        SchemeId::MovementOnly,
        SchemeId::WidebandFpa,
        SchemeId::NarrowbandFpa,
    ];
    let ordered = order.windows(2).all(|p| db(p[0]) >= db(p[1]) - 0.5);
    let prop_wide = db(SchemeId::Proposed6dma) - db(SchemeId::WidebandFpa);
    let rot_mov = db(SchemeId::RotationOnly) - db(SchemeId::MovementOnly);
    let listing: Vec<String> = order.iter().map(|&s| format!("{} {:.2}", s.name(), db(s))).collect();
    verdict(
        ordered && prop_wide >= 8.0 && rot_mov >= 3.0,
        format!(
            "{} dB; proposed - wideband {prop_wide:.2} dB, rotation - movement {rot_mov:.2} dB",
            listing.join(", ")
        ),
    )
}

/// Schemes whose rotation comes from the stochastic search.
fn stochastic(s: SchemeId) -> bool {
    matches!(s, SchemeId::RotationOnly | SchemeId::Proposed6dma | SchemeId::LinearMa)
}

/// Per scheme: the sweep must not increase (beyond the slack) and proposed
/// must lose the fewest dB from first to last value.
fn judge_sweep(label: &str, series: &[(f64, &RunOutcome)]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    let mut drops = Vec::new();
    for s in SchemeId::ALL {
        let g: Vec<f64> = series.iter().map(|(_, o)| to_db(o.gain(s.name()).unwrap())).collect();
        let slack = if stochastic(s) { 0.3 } else { 1e-9 };
        if let Some(w) = g.windows(2).find(|w| w[1] > w[0] + slack) {
            ok = false;
            notes.push(format!("{} rises {:.3} -> {:.3}", s.name(), w[0], w[1]));
        }
        drops.push((s, g[0] - g[g.len() - 1]));
    }
    let prop = drops.iter().find(|d| d.0 == SchemeId::Proposed6dma).unwrap().1;
    let (other, least) = drops
        .iter()
        .filter(|d| d.0 != SchemeId::Proposed6dma)
        .fold((SchemeId::Proposed6dma, f64::INFINITY), |b, d| if d.1 < b.1 { (d.0, d.1) } else { b });
    if prop > least {
        ok = false;
    }
    let values: Vec<String> = series.iter().map(|(v, _)| format!("{v}")).collect();
    notes.insert(
        0,
        format!(
            "{label} {{{}}}: proposed drops {prop:.3} dB, least other {} {least:.3} dB",
            values.join(", "),
            other.name()
        ),
    );
    (ok, notes.join("; "))
}

fn criterion_8(tmp: &Path) -> Verdict {
    let cfg = |dir: &str| ExperimentConfig { output_dir: tmp.join(dir), ..ExperimentConfig::default() };
    let bw = run_sweep(&cfg("bw"), SweepParam::BandwidthHz, &[1e10, 5e10, 1e11]).unwrap();
    let phi = run_sweep(&cfg("phi"), SweepParam::PhiWidthDeg, &[10.0, 45.0]).unwrap();
    // The 90 degree width at 100 GHz is the last bandwidth point.
    let mut phi_series: Vec<(f64, &RunOutcome)> = phi.iter().map(|p| (p.value, &p.outcome)).collect();
    phi_series.push((90.0, &bw[2].outcome));
    let bw_series: Vec<(f64, &RunOutcome)> = bw.iter().map(|p| (p.value / 1e9, &p.outcome)).collect();
    let (ok_bw, note_bw) = judge_sweep("bandwidth GHz", &bw_series);
    let (ok_phi, note_phi) = judge_sweep("azimuth width deg", &phi_series);
    verdict(ok_bw && ok_phi, format!("{note_bw}; {note_phi}"))
}

fn criterion_9() -> Verdict {
    let l = lambda();
    let grid: CoverageGrid = build_grid([0.0, FRAC_PI_2], [0.0, FRAC_PI_2], [0.95e12, 1.05e12], [8, 8, 5]).unwrap();
    let problem = Problem::new(grid.clone(), 9, l / 2.0, 2.0 * l, FC);
    let init = initialize(&problem, SchemeId::Proposed6dma).unwrap();
    let mut regressions = 0;
    let mut least_gain = f64::INFINITY;
    for seed in 0..20u64 {
        let mut rng = StreamRng::new(seed, 9);
        let w =
            BeamWeights::from_phases(init.weights.phases().iter().map(|p| p + uniform(&mut rng, -0.5, 0.5)).collect());
        let r_star = hybrid_search(&w, &init.layout, &grid, &RotationGridConfig::default());
        let g_star = min_gain(&w, r_star, &init.layout, &grid).unwrap();
        let r_gs = gibbs_refine(r_star, &w, &init.layout, &grid, &GibbsConfig { seed, ..GibbsConfig::default() });
        let g_gs = min_gain(&w, r_gs, &init.layout, &grid).unwrap();
        regressions += usize::from(g_gs < g_star);
        least_gain = least_gain.min(to_db(g_gs) - to_db(g_star));
    }
    verdict(
        regressions == 0,
        format!("{regressions} regressions over 20 seeds; smallest refinement gain {least_gain:.4} dB"),
    )
}

fn main() -> ExitCode {
    let tmp = TempDir::new().unwrap();
    let mut desk = None;
    let secs = Duration::from_secs;
    let results = [
        check(1, "closed-form line array is exact", Some(secs(1)), criterion_1),
        check(2, "planar array 1D gap", Some(secs(600)), criterion_2),
        check(3, "squint diagnostics", Some(secs(10)), criterion_3),
        check(4, "surrogate bounds", Some(secs(30)), criterion_4),
        check(5, "interior-point solver quality", Some(secs(300)), criterion_5),
        check(6, "AO monotonicity and determinism", None, || criterion_6(tmp.path(), &mut desk)),
        check(7, "benchmark ordering", None, || criterion_7(desk.as_ref())),
        check(8, "sweep trends", Some(secs(1800)), || criterion_8(tmp.path())),
        check(9, "Gibbs refinement never regresses", None, criterion_9),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
