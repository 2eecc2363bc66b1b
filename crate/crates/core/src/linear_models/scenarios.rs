//! Seeded inputs for the three linear estimate checks, shared by the command
//! line and the test suites. Each scenario has a constant-coefficient variant
//! (`a = 0`, `v = 0`).

use serde::{Deserialize, Serialize};

use super::mixed::{mixed_estimate_check, mixed_field_solve};
use super::momentum::{linearized_momentum_solve, momentum_estimate_check, EstimateCheckConfig, MomentumProblem};
use super::report::EstimateReport;
use super::stepping::step_plan;
use super::transport::{transport_estimate_check, TransportOptions};
use crate::error::Result;
use crate::spectral_field::multipliers::leray_spectra;
use crate::spectral_field::random::{random_field, random_spectrum};
use crate::spectral_field::{Field, Grid, Spectrum, TensorField, VectorField};

const SLOPE: f64 = 1.0;

/// Knobs common to the scenario families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub mu: f64,
    pub t_final: f64,
    pub dt: f64,
    /// Peak of the advecting velocity.
    pub velocity_amplitude: f64,
    /// Peak of the density perturbation `a = b - 1`.
    pub density_amplitude: f64,
    /// Largest populated wavenumber radius of the random data.
    pub k_max: f64,
    pub c_max: f64,
    /// Drop the variable coefficients (`a = 0`, `v = 0`).
    pub constant_coefficients: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            mu: 1.0,
            t_final: 0.5,
            dt: 0.005,
            velocity_amplitude: 0.5,
            density_amplitude: 0.3,
            k_max: 8.0,
            c_max: 1e3,
            constant_coefficients: false,
        }
    }
}

fn peak_scaled(f: Field, peak: f64) -> Field {
    let m = f.max_abs();
    if m > 0.0 {
        f.scaled(peak / m)
    } else {
        f
    }
}

/// Stationary divergence-free field on `1 <= |k| <= 4` with peak `amplitude`.
pub fn stationary_velocity(grid: &Grid, seed: u64, amplitude: f64) -> VectorField {
    let raw: Vec<Spectrum> = (0..grid.dim())
        .map(|i| random_spectrum(grid, seed.wrapping_mul(31).wrapping_add(i as u64), SLOPE, Some((1.0, 4.0))))
        .collect();
    let v = VectorField::from_spectra(&leray_spectra(&raw));
    let peak = v.max_abs();
    if peak > 0.0 {
        v.scaled(amplitude / peak)
    } else {
        v
    }
}

fn random_vector(grid: &Grid, seed: u64, k_max: f64, solenoidal: bool) -> VectorField {
    let raw: Vec<Spectrum> = (0..grid.dim())
        .map(|i| random_spectrum(grid, seed.wrapping_mul(37).wrapping_add(i as u64), SLOPE, Some((1.0, k_max))))
        .collect();
    let s = if solenoidal { leray_spectra(&raw) } else { raw };
    VectorField::from_spectra(&s)
}

fn random_tensor(grid: &Grid, seed: u64, k_max: f64) -> TensorField {
    let comps: Vec<Field> = (0..grid.dim() * grid.dim())
        .map(|ij| random_field(grid, seed.wrapping_mul(41).wrapping_add(ij as u64), SLOPE, Some((1.0, k_max))))
        .collect();
    TensorField::new(comps).expect("dim^2 components")
}

fn velocity_for(grid: &Grid, seed: u64, cfg: &ScenarioConfig) -> VectorField {
    if cfg.constant_coefficients {
        VectorField::zeros(grid)
    } else {
        stationary_velocity(grid, seed.wrapping_add(7), cfg.velocity_amplitude)
    }
}

/// Transport of a random density by a stationary random flow, checked at `(s, r)`.
pub fn transport_scenario(grid: &Grid, seed: u64, cfg: &ScenarioConfig, s: f64, r: f64) -> Result<EstimateReport> {
    let a0 = random_field(grid, seed.wrapping_mul(3), SLOPE, Some((1.0, cfg.k_max)));
    let v = velocity_for(grid, seed, cfg);
    let velocity = |_t: f64| v.clone();
    transport_estimate_check(&a0, &velocity, None, cfg.t_final, s, r, TransportOptions::new(cfg.dt), cfg.c_max)
}

/// Variable-density Stokes flow advected by a stationary random field.
pub fn momentum_scenario(grid: &Grid, seed: u64, cfg: &ScenarioConfig, check: &EstimateCheckConfig) -> Result<EstimateReport> {
    let u0 = random_vector(grid, seed.wrapping_mul(5), cfg.k_max, true);
    let b = if cfg.constant_coefficients {
        Field::constant(grid, 1.0)
    } else {
        let a = random_field(grid, seed.wrapping_mul(5).wrapping_add(2), SLOPE, Some((1.0, 4.0)));
        peak_scaled(a, cfg.density_amplitude).map(|x| 1.0 + x)
    };
    let v = velocity_for(grid, seed, cfg);
    let velocity = |_t: f64| v.clone();
    let mut problem = MomentumProblem::new(&u0, &b, cfg.mu, cfg.t_final, cfg.dt);
    if !cfg.constant_coefficients {
        problem.velocity = Some(&velocity);
    }
    let run = linearized_momentum_solve(&problem)?;
    momentum_estimate_check(&problem, &run, check)
}

/// Free evolution of random `(E0, d0)` under the damped mixed system.
pub fn mixed_scenario(grid: &Grid, seed: u64, cfg: &ScenarioConfig, s: f64) -> Result<EstimateReport> {
    let e0 = random_tensor(grid, seed.wrapping_mul(7), cfg.k_max);
    let d0 = random_tensor(grid, seed.wrapping_mul(7).wrapping_add(3), cfg.k_max);
    let (steps, h) = step_plan(cfg.t_final, cfg.dt);
    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * h).collect();
    let run = mixed_field_solve(&e0, &d0, cfg.mu, None, &times)?;
    mixed_estimate_check(&run, None, s, cfg.c_max)
}
