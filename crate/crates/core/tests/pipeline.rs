//! End-to-end runs through the public API on small problems.

use sixdma_core::ao::{run_scheme, AOConfig, Problem, SchemeId};
use sixdma_core::closed_form::solve_1d;
use sixdma_core::gain::{array_response, beam_gain, build_grid, min_gain, CoverageGrid};
use sixdma_core::geometry::AntennaLayout;
use sixdma_core::{wavelength, Error};

const FC: f64 = 1e12;

fn grid_2d() -> CoverageGrid {
    build_grid([30f64.to_radians(), 90f64.to_radians()], [0.0, 90f64.to_radians()], [0.95e12, 1.05e12], [4, 4, 3])
        .unwrap()
}

fn small_problem() -> Problem {
    let l = wavelength(FC);
    Problem::new(grid_2d(), 4, l / 2.0, 1.5 * l, FC)
}

fn quick() -> AOConfig {
    let mut cfg = AOConfig::default();
    cfg.max_outer_iters = 3;
    cfg.gibbs.iters = 10;
    cfg
}

// Scores by building every steering vector from scratch, independent of the
// batched evaluator used inside the optimizer.
fn brute_min_gain(res: &sixdma_core::ao::SchemeResult, grid: &CoverageGrid) -> f64 {
    let s = &res.state;
    grid.points()
        .map(|p| {
            let a = array_response(p.freq, &p.direction(), s.rotation, &s.layout).unwrap();
            beam_gain(&s.weights, &a).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

fn assert_feasible(layout: &AntennaLayout) {
    let h = layout.region_half_width();
    assert!(layout.min_pairwise_distance() >= layout.min_spacing() * (1.0 - 1e-12));
    for p in layout.positions() {
        assert!(p.y.abs() <= h * (1.0 + 1e-12) && p.z.abs() <= h * (1.0 + 1e-12), "{p:?}");
    }
}

#[test]
fn every_scheme_is_monotone_feasible_and_scored_consistently() {
    let problem = small_problem();
    let cfg = quick();
    for scheme in SchemeId::ALL {
        let res = run_scheme(scheme, &problem, &cfg).unwrap();
        let trace = &res.state.min_gain_trace;
        assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{}: {trace:?}", scheme.name());
        assert_feasible(&res.state.layout);
        let brute = brute_min_gain(&res, &problem.grid);
        assert!(
            (res.min_gain - brute).abs() <= 1e-9 * brute.max(1.0),
            "{}: {} vs {brute}",
            scheme.name(),
            res.min_gain
        );
        assert!(res.min_gain > 0.0 && res.min_gain <= problem.n_antennas as f64 + 1e-9);
    }
}

#[test]
fn fixed_array_schemes_keep_their_geometry() {
    let problem = small_problem();
    let cfg = quick();
    let wide = run_scheme(SchemeId::WidebandFpa, &problem, &cfg).unwrap();
    let rot = run_scheme(SchemeId::RotationOnly, &problem, &cfg).unwrap();
    let init = sixdma_core::ao::initialize(&problem, SchemeId::WidebandFpa).unwrap();
    assert_eq!(wide.state.layout, init.layout);
    assert_eq!(wide.state.rotation, init.rotation);
    assert_eq!(rot.state.layout, init.layout);
}

#[test]
fn reruns_are_identical() {
    let problem = small_problem();
    let cfg = quick();
    let a = run_scheme(SchemeId::Proposed6dma, &problem, &cfg).unwrap();
    let b = run_scheme(SchemeId::Proposed6dma, &problem, &cfg).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.min_gain.to_bits(), b.min_gain.to_bits());
}

#[test]
fn closed_form_beats_every_optimized_planar_layout_on_its_cut() {
    let l = wavelength(FC);
    let phi0 = 20f64.to_radians();
    let cut =
        build_grid([30f64.to_radians(), 90f64.to_radians()], [phi0, phi0], [0.95e12, 1.05e12], [12, 1, 4]).unwrap();
    let cf = solve_1d(phi0, 4, l / 2.0, 1.5 * l).unwrap();
    let exact = min_gain(&cf.weights, cf.rotation, &cf.layout, &cut).unwrap();
    assert!((exact - 4.0).abs() <= 4e-9);

    let problem = Problem::new(cut, 4, l / 2.0, 1.5 * l, FC);
    let res = run_scheme(SchemeId::Proposed6dma, &problem, &quick()).unwrap();
    assert!(res.min_gain <= exact + 1e-9);
}

#[test]
fn too_many_antennas_for_the_region_is_a_geometry_error() {
    let l = wavelength(FC);
    let problem = Problem::new(grid_2d(), 64, l / 2.0, 1.5 * l, FC);
    match run_scheme(SchemeId::WidebandFpa, &problem, &quick()) {
        Err(Error::InfeasibleGeometry(_)) => {}
        other => panic!("expected infeasible geometry, got {other:?}"),
    }
}
