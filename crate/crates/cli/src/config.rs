//! Flat JSON experiment configuration.
//!
//! Every field is optional; missing fields take the defaults below. Unknown
//! fields are rejected so typos do not silently fall back to a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sixdma_core::ao::{uniform_cells, AOConfig, Problem, SchemeId};
use sixdma_core::gain::{build_grid, CoverageGrid};
use sixdma_core::rotation::{GibbsConfig, RotationGridConfig, Temperature};
use sixdma_core::sca::{PenaltyConfig, PositionScaConfig};
use sixdma_core::wavelength;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Run the listed optimization schemes.
    Ao,
    /// Rotated-ULA optimum for a single azimuth cut.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub n_antennas: usize,
    pub min_spacing_wavelengths: f64,
    /// Side `A` of the square movement region.
    pub region_wavelengths: f64,
    pub theta_deg_range: [f64; 2],
    /// A degenerate range `[φ0, φ0]` is a single azimuth cut.
    pub phi_deg_range: [f64; 2],
    /// `(L1, L2, L3)`: samples in elevation, azimuth and frequency.
    pub grid_counts: [usize; 3],
    /// Confine each element to its own cell of a near-square partition of the
    /// region.
    pub per_element_cells: bool,
    pub schemes: Vec<String>,

    pub max_outer_iters: usize,
    pub outer_tol: f64,
    /// `None` means `0.1 N`.
    pub penalty_rho: Option<f64>,
    pub penalty_max_iters: usize,
    pub penalty_tol: f64,
    pub position_max_iters: usize,
    pub position_tol: f64,
    pub rotation_coarse_counts: [usize; 3],
    pub rotation_fine_counts: [usize; 3],
    pub gibbs_iters: usize,
    pub gibbs_candidates: usize,
    pub gibbs_neighbor_radius: usize,
    pub gibbs_steps_per_turn: u32,
    /// Fixed soft-max weight; `None` uses `gibbs_temperature_scale / G_min`.
    pub gibbs_temperature: Option<f64>,
    pub gibbs_temperature_scale: f64,
    pub resteer: bool,
    pub seed: u64,

    pub output_dir: PathBuf,
    /// Parallel scheme runs; 0 uses every available core.
    pub workers: usize,
    pub write_solver_log: bool,
    pub write_gibbs_trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ao = AOConfig::default();
        let n = 9;
        Self {
            mode: Mode::Ao,
            carrier_hz: 1e12,
            bandwidth_hz: 1e11,
            n_antennas: n,
            min_spacing_wavelengths: 0.5,
            region_wavelengths: 4.0,
            theta_deg_range: [0.0, 90.0],
            phi_deg_range: [0.0, 90.0],
            grid_counts: [16, 16, 8],
            per_element_cells: false,
            schemes: SchemeId::ALL.iter().map(|s| s.name().to_string()).collect(),
            max_outer_iters: ao.max_outer_iters,
            outer_tol: ao.outer_tol,
            penalty_rho: None,
            penalty_max_iters: PenaltyConfig::for_antennas(n).max_iters,
            penalty_tol: PenaltyConfig::for_antennas(n).tol,
            position_max_iters: ao.position.max_iters,
            position_tol: ao.position.tol,
            rotation_coarse_counts: ao.rotation_grid.coarse_counts,
            rotation_fine_counts: ao.rotation_grid.fine_counts,
            gibbs_iters: ao.gibbs.iters,
            gibbs_candidates: ao.gibbs.candidates_per_iter,
            gibbs_neighbor_radius: ao.gibbs.neighbor_radius,
            gibbs_steps_per_turn: ao.gibbs.steps_per_turn,
            gibbs_temperature: None,
            gibbs_temperature_scale: 5.0,
            resteer: ao.resteer,
            seed: 0,
            output_dir: PathBuf::from("out"),
            workers: 0,
            write_solver_log: false,
            write_gibbs_trace: false,
        }
    }
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be positive and finite, got {v}")))
    }
}

fn ordered(field: &str, r: [f64; 2]) -> Result<(), CliError> {
    if r.iter().all(|v| v.is_finite()) && r[0] <= r[1] {
        Ok(())
    } else {
        Err(field_error(field, format!("must be finite with lower <= upper, got {r:?}")))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                CliError::Config(inner.to_string())
            } else {
                field_error(&path, inner)
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("carrier_hz", self.carrier_hz)?;
        positive("bandwidth_hz", self.bandwidth_hz)?;
        if self.bandwidth_hz >= 2.0 * self.carrier_hz {
            return Err(field_error("bandwidth_hz", "must be below 2 * carrier_hz"));
        }
        if self.n_antennas == 0 {
            return Err(field_error("n_antennas", "must be at least 1"));
        }
        positive("min_spacing_wavelengths", self.min_spacing_wavelengths)?;
        positive("region_wavelengths", self.region_wavelengths)?;
        ordered("theta_deg_range", self.theta_deg_range)?;
        ordered("phi_deg_range", self.phi_deg_range)?;
        if self.grid_counts.contains(&0) {
            return Err(field_error("grid_counts", "every count must be at least 1"));
        }
        for s in &self.schemes {
            if SchemeId::from_name(s).is_none() {
                let known: Vec<&str> = SchemeId::ALL.iter().map(|s| s.name()).collect();
                return Err(field_error("schemes", format!("unknown scheme {s:?}; expected one of {known:?}")));
            }
        }
        positive("outer_tol", self.outer_tol)?;
        if let Some(rho) = self.penalty_rho {
            positive("penalty_rho", rho)?;
        }
        positive("penalty_tol", self.penalty_tol)?;
        positive("position_tol", self.position_tol)?;
        if self.rotation_coarse_counts.contains(&0) {
            return Err(field_error("rotation_coarse_counts", "every count must be at least 1"));
        }
        if self.rotation_fine_counts.contains(&0) {
            return Err(field_error("rotation_fine_counts", "every count must be at least 1"));
        }
        if self.gibbs_candidates < 6 * self.gibbs_neighbor_radius + 1 {
            return Err(field_error("gibbs_candidates", "must be at least 6 * gibbs_neighbor_radius + 1"));
        }
        if self.gibbs_steps_per_turn == 0 {
            return Err(field_error("gibbs_steps_per_turn", "must be at least 1"));
        }
        if let Some(mu) = self.gibbs_temperature {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(field_error("gibbs_temperature", "must be finite and nonnegative"));
            }
        }
        positive("gibbs_temperature_scale", self.gibbs_temperature_scale)?;
        if self.mode == Mode::ClosedForm && self.phi_deg_range[0] != self.phi_deg_range[1] {
            return Err(field_error("phi_deg_range", "closed_form mode needs a single azimuth [phi0, phi0]"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier_hz)
    }

    pub fn scheme_ids(&self) -> Vec<SchemeId> {
        self.schemes.iter().filter_map(|s| SchemeId::from_name(s)).collect()
    }

    pub fn grid(&self) -> Result<CoverageGrid, CliError> {
        let [t0, t1] = self.theta_deg_range;
        let [p0, p1] = self.phi_deg_range;
        let mut counts = self.grid_counts;
        if p0 == p1 {
            counts[1] = 1;
        }
        let half = self.bandwidth_hz / 2.0;
        build_grid(
            [t0.to_radians(), t1.to_radians()],
            [p0.to_radians(), p1.to_radians()],
            [self.carrier_hz - half, self.carrier_hz + half],
            counts,
        )
        .map_err(|e| CliError::Config(format!("coverage grid: {e}")))
    }

    pub fn problem(&self) -> Result<Problem, CliError> {
        let lambda = self.wavelength();
        let half = 0.5 * self.region_wavelengths * lambda;
        let mut p =
            Problem::new(self.grid()?, self.n_antennas, self.min_spacing_wavelengths * lambda, half, self.carrier_hz);
        if self.per_element_cells {
            p.cells = Some(uniform_cells(self.n_antennas, half));
        }
        Ok(p)
    }

    pub fn ao_config(&self) -> AOConfig {
        let penalty = PenaltyConfig {
            rho: self.penalty_rho.unwrap_or(PenaltyConfig::for_antennas(self.n_antennas).rho),
            max_iters: self.penalty_max_iters,
            tol: self.penalty_tol,
        };
        AOConfig {
            max_outer_iters: self.max_outer_iters,
            outer_tol: self.outer_tol,
            penalty: Some(penalty),
            position: PositionScaConfig { max_iters: self.position_max_iters, tol: self.position_tol, fix_z: false },
            rotation_grid: RotationGridConfig {
                coarse_counts: self.rotation_coarse_counts,
                fine_counts: self.rotation_fine_counts,
            },
            gibbs: GibbsConfig {
                iters: self.gibbs_iters,
                candidates_per_iter: self.gibbs_candidates,
                neighbor_radius: self.gibbs_neighbor_radius,
                steps_per_turn: self.gibbs_steps_per_turn,
                temperature: match self.gibbs_temperature {
                    Some(mu) => Temperature::Fixed(mu),
                    None => Temperature::Adaptive(self.gibbs_temperature_scale),
                },
                seed: self.seed,
            },
            resteer: self.resteer,
            record_logs: self.write_solver_log || self.write_gibbs_trace,
            seed: self.seed,
        }
    }
}
