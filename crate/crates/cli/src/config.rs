//! Run configuration: one TOML document with global keys and one table per
//! subcommand. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use visco_core::linear_models::ScenarioConfig;
use visco_core::spectral_field::Grid;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: usize,
    /// Points per axis.
    pub grid: usize,
    pub mu: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub svg: bool,
    pub lp_check: LpCheckConfig,
    pub bony_check: BonyCheckConfig,
    pub estimates: EstimatesConfig,
    pub linear_spectrum: LinearSpectrumConfig,
    pub simulate: SimulateConfig,
    pub sweep: SweepSection,
    pub gen_data: GenDataConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            grid: 64,
            mu: 1.0,
            seed: 1,
            out: PathBuf::from("out"),
            svg: true,
            lp_check: LpCheckConfig::default(),
            bony_check: BonyCheckConfig::default(),
            estimates: EstimatesConfig::default(),
            linear_spectrum: LinearSpectrumConfig::default(),
            simulate: SimulateConfig::default(),
            sweep: SweepSection::default(),
            gen_data: GenDataConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LpCheckConfig {
    pub ensemble: usize,
    /// Multiplies every block profile; anything but 1 corrupts the family.
    pub cutoff_scale: f64,
}

impl Default for LpCheckConfig {
    fn default() -> Self {
        Self {
            ensemble: 20,
            cutoff_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BonyCheckConfig {
    pub pairs: usize,
    pub tolerance: f64,
}

impl Default for BonyCheckConfig {
    fn default() -> Self {
        Self {
            pairs: 50,
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesConfig {
    /// Product estimates to run; empty means all eight.
    pub products: Vec<String>,
    pub ensembles: usize,
    pub members: usize,
    pub c_max: f64,
    /// Largest allowed max/min ratio of fitted constants across seeds or ensembles.
    pub max_spread: f64,
    /// Bound on the fitted constant of the constant-coefficient runs.
    pub reduction_c_max: f64,
    /// Number of seeds for the linear checks, starting at the global seed.
    pub seeds: usize,
    pub t_final: f64,
    pub dt: f64,
    pub velocity_amplitude: f64,
    pub density_amplitude: f64,
    pub k_max: f64,
    pub transport_s: f64,
    pub transport_r: f64,
    pub momentum_s: f64,
    pub momentum_r: f64,
    pub momentum_alpha: f64,
    pub mixed_s: f64,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        let sc = ScenarioConfig::default();
        Self {
            products: Vec::new(),
            ensembles: 3,
            members: 20,
            c_max: sc.c_max,
            max_spread: 10.0,
            reduction_c_max: 10.0,
            seeds: 3,
            t_final: sc.t_final,
            dt: sc.dt,
            velocity_amplitude: sc.velocity_amplitude,
            density_amplitude: sc.density_amplitude,
            k_max: sc.k_max,
            transport_s: 1.0,
            transport_r: 1.0,
            momentum_s: 0.5,
            momentum_r: 1.0,
            momentum_alpha: 0.5,
            mixed_s: 1.0,
        }
    }
}

impl EstimatesConfig {
    pub fn scenario(&self, mu: f64, constant_coefficients: bool) -> ScenarioConfig {
        ScenarioConfig {
            mu,
            t_final: self.t_final,
            dt: self.dt,
            velocity_amplitude: self.velocity_amplitude,
            density_amplitude: self.density_amplitude,
            k_max: self.k_max,
            c_max: self.c_max,
            constant_coefficients,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSpectrumConfig {
    pub xi_max: f64,
    pub points: usize,
    /// Tolerance on the slow rate against `-1/mu` at `|xi| = 100/mu`.
    pub slow_rate_tolerance: f64,
}

impl Default for LinearSpectrumConfig {
    fn default() -> Self {
        Self {
            xi_max: 20.0,
            points: 401,
            slow_rate_tolerance: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub amplitude: f64,
    pub band: [i32; 2],
    pub flow_steps: usize,
    /// Directory written by `gen-data`; overrides the generated data when set.
    pub data_dir: Option<PathBuf>,
    pub t_final: f64,
    pub dt: f64,
    pub cadence: usize,
    /// Friedrichs radius; defaults to the dealias radius.
    pub n_cut: Option<f64>,
    /// Write a checkpoint every this many diagnostics rows (0: final state only).
    pub checkpoint_every: usize,
    pub b_min: f64,
    pub det_abort: f64,
    pub bootstrap: bool,
    pub lambda: Option<f64>,
    pub u_tilde0: Option<f64>,
    /// Friedrichs radii for the truncation ladder; empty skips it.
    pub ladder: Vec<f64>,
    /// Largest allowed relative `div u` residual over all steps.
    pub div_tol: f64,
    /// Largest allowed constraint residual at the final time.
    pub constraint_tol: f64,
    /// Largest allowed d-reformulation residual at the final time.
    pub d_tol: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-2,
            band: [0, 1],
            flow_steps: 64,
            data_dir: None,
            t_final: 10.0,
            dt: 0.01,
            cadence: 10,
            n_cut: None,
            checkpoint_every: 0,
            b_min: 0.1,
            det_abort: 1e-2,
            bootstrap: true,
            lambda: None,
            u_tilde0: None,
            ladder: Vec::new(),
            div_tol: 1e-10,
            constraint_tol: 1e-6,
            d_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub amplitudes: Vec<f64>,
    /// Number of seeds, starting at the global seed.
    pub seeds: usize,
    pub t_final: f64,
    pub dt: f64,
    pub cadence: usize,
    pub band: [i32; 2],
    pub flow_steps: usize,
    /// Largest allowed max/min ratio of `max Y / alpha` over the sweep.
    pub max_variation: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            amplitudes: vec![1e-3, 3e-3, 1e-2, 3e-2],
            seeds: 2,
            t_final: 10.0,
            dt: 0.01,
            cadence: 10,
            band: [0, 1],
            flow_steps: 64,
            max_variation: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenDataConfig {
    pub amplitude: f64,
    pub band: [i32; 2],
    pub flow_time: Option<f64>,
    pub flow_steps: usize,
    pub b_min: f64,
}

impl Default for GenDataConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-2,
            band: [0, 1],
            flow_time: None,
            flow_steps: 64,
            b_min: 0.1,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub mu: Option<f64>,
    pub out: Option<PathBuf>,
    pub no_svg: bool,
}

fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config(format!("{key}: {}", message.into()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
            None => Self::default(),
        };
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        if let Some(n) = overrides.grid {
            cfg.grid = n;
        }
        if let Some(mu) = overrides.mu {
            cfg.mu = mu;
        }
        if let Some(out) = &overrides.out {
            cfg.out = out.clone();
        }
        if overrides.no_svg {
            cfg.svg = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the global keys and every table, naming the first offending key.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(config_error("dim", format!("must be 2 or 3, got {}", self.dim)));
        }
        if self.grid < 16 || !self.grid.is_power_of_two() {
            return Err(config_error("grid", format!("must be a power of two >= 16, got {}", self.grid)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(config_error("mu", format!("must be positive, got {}", self.mu)));
        }
        let positive = |key: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(config_error(key, format!("must be positive, got {x}")))
            }
        };
        let nonzero = |key: &str, n: usize| {
            if n > 0 {
                Ok(())
            } else {
                Err(config_error(key, "must be at least 1"))
            }
        };
        nonzero("lp_check.ensemble", self.lp_check.ensemble)?;
        positive("lp_check.cutoff_scale", self.lp_check.cutoff_scale)?;
        nonzero("bony_check.pairs", self.bony_check.pairs)?;
        positive("bony_check.tolerance", self.bony_check.tolerance)?;

        let e = &self.estimates;
        for p in &e.products {
            p.parse::<visco_core::bony::EstimateId>()
                .map_err(|_| config_error("estimates.products", format!("unknown estimate `{p}`")))?;
        }
        nonzero("estimates.ensembles", e.ensembles)?;
        nonzero("estimates.members", e.members)?;
        nonzero("estimates.seeds", e.seeds)?;
        positive("estimates.c_max", e.c_max)?;
        positive("estimates.max_spread", e.max_spread)?;
        positive("estimates.reduction_c_max", e.reduction_c_max)?;
        positive("estimates.t_final", e.t_final)?;
        positive("estimates.dt", e.dt)?;
        positive("estimates.k_max", e.k_max)?;
        if !(e.density_amplitude >= 0.0 && e.density_amplitude <= 0.5) {
            return Err(config_error("estimates.density_amplitude", "must lie in [0, 0.5]"));
        }
        if !(e.velocity_amplitude >= 0.0) {
            return Err(config_error("estimates.velocity_amplitude", "must be >= 0"));
        }

        let l = &self.linear_spectrum;
        positive("linear_spectrum.xi_max", l.xi_max)?;
        if l.points < 2 {
            return Err(config_error("linear_spectrum.points", "must be at least 2"));
        }
        positive("linear_spectrum.slow_rate_tolerance", l.slow_rate_tolerance)?;

        let s = &self.simulate;
        if !(s.amplitude >= 0.0) {
            return Err(config_error("simulate.amplitude", "must be >= 0"));
        }
        positive("simulate.t_final", s.t_final)?;
        positive("simulate.dt", s.dt)?;
        nonzero("simulate.cadence", s.cadence)?;
        nonzero("simulate.flow_steps", s.flow_steps)?;
        positive("simulate.det_abort", s.det_abort)?;
        if let Some(l) = s.lambda {
            positive("simulate.lambda", l)?;
        }
        positive("simulate.div_tol", s.div_tol)?;
        positive("simulate.constraint_tol", s.constraint_tol)?;
        positive("simulate.d_tol", s.d_tol)?;
        if let Some(n) = s.n_cut {
            positive("simulate.n_cut", n)?;
        }
        if !(s.b_min > 0.0 && s.b_min < 1.0) {
            return Err(config_error("simulate.b_min", "must lie in (0, 1)"));
        }
        if s.ladder.len() == 1 || s.ladder.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(config_error("simulate.ladder", "needs at least two strictly ascending radii"));
        }

        let w = &self.sweep;
        if w.amplitudes.is_empty() || w.amplitudes.iter().any(|a| !(*a >= 0.0)) || w.amplitudes.windows(2).any(|p| p[0] >= p[1]) {
            return Err(config_error("sweep.amplitudes", "must be nonempty, nonnegative and strictly ascending"));
        }
        nonzero("sweep.seeds", w.seeds)?;
        positive("sweep.t_final", w.t_final)?;
        positive("sweep.dt", w.dt)?;
        nonzero("sweep.cadence", w.cadence)?;
        nonzero("sweep.flow_steps", w.flow_steps)?;
        positive("sweep.max_variation", w.max_variation)?;

        let g = &self.gen_data;
        if !(g.amplitude >= 0.0) {
            return Err(config_error("gen_data.amplitude", "must be >= 0"));
        }
        nonzero("gen_data.flow_steps", g.flow_steps)?;
        if let Some(t) = g.flow_time {
            if !(t >= 0.0) {
                return Err(config_error("gen_data.flow_time", "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        Grid::new(self.dim, self.grid).map_err(|e| config_error("grid", e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

/// One documented key of the schema.
#[derive(Clone, Debug, Serialize)]
pub struct SchemaEntry {
    pub key: String,
    #[serde(rename = "type")]
    pub kind: &'static str,
    pub default: serde_json::Value,
    pub description: &'static str,
}

const DESCRIPTIONS: &[(&str, &str)] = &[
    ("dim", "spatial dimension (2 or 3)"),
    ("grid", "points per axis, a power of two >= 16"),
    ("mu", "viscosity"),
    ("seed", "base seed of every random input"),
    ("out", "output directory"),
    ("svg", "write SVG plots next to the data"),
    ("lp_check.ensemble", "random fields in the Bernstein check"),
    ("lp_check.cutoff_scale", "multiplier on the block profiles (1 = correct family)"),
    ("bony_check.pairs", "field pairs in the reconstruction check"),
    ("bony_check.tolerance", "largest accepted relative reconstruction residual"),
    ("estimates.products", "product estimates to run (empty = all)"),
    ("estimates.ensembles", "independent ensembles per product estimate"),
    ("estimates.members", "field pairs per ensemble"),
    ("estimates.c_max", "largest accepted ratio or fitted constant"),
    ("estimates.max_spread", "largest accepted max/min ratio across ensembles or seeds"),
    ("estimates.reduction_c_max", "bound on fitted constants with constant coefficients"),
    ("estimates.seeds", "seeds of the linear checks, counted from the global seed"),
    ("estimates.t_final", "horizon of the linear checks"),
    ("estimates.dt", "time step of the linear checks"),
    ("estimates.velocity_amplitude", "peak of the advecting velocity"),
    ("estimates.density_amplitude", "peak of the density perturbation"),
    ("estimates.k_max", "largest wavenumber radius of the random data"),
    ("estimates.transport_s", "regularity of the transport check"),
    ("estimates.transport_r", "summability of the transport check"),
    ("estimates.momentum_s", "regularity of the momentum check"),
    ("estimates.momentum_r", "summability of the momentum check"),
    ("estimates.momentum_alpha", "interpolation exponent of the momentum check"),
    ("estimates.mixed_s", "regularity of the mixed-system check"),
    ("linear_spectrum.xi_max", "largest |xi| tabulated"),
    ("linear_spectrum.points", "number of |xi| samples"),
    ("linear_spectrum.slow_rate_tolerance", "relative tolerance of the slow rate against -1/mu"),
    ("simulate.amplitude", "size of each initial field"),
    ("simulate.band", "dyadic block range [q_lo, q_hi] of the data"),
    ("simulate.flow_steps", "RK4 substeps of the deformation generator"),
    ("simulate.data_dir", "load a0/u0/E0 written by gen-data instead"),
    ("simulate.t_final", "final time"),
    ("simulate.dt", "time step"),
    ("simulate.cadence", "steps between diagnostics rows"),
    ("simulate.n_cut", "Friedrichs radius (default: dealias radius)"),
    ("simulate.checkpoint_every", "diagnostics rows between checkpoints (0 = final only)"),
    ("simulate.b_min", "lower bound on 1 + a"),
    ("simulate.det_abort", "abort threshold on max |det(I + E) - 1|"),
    ("simulate.bootstrap", "evaluate the bootstrap conditions"),
    ("simulate.lambda", "factor of the fluctuation bound (default: half the density-growth limit)"),
    ("simulate.u_tilde0", "reference fluctuation size (default: 8 (U0 + 1), U0 the initial velocity norm)"),
    ("simulate.ladder", "ascending Friedrichs radii for the truncation ladder"),
    ("simulate.div_tol", "largest allowed relative div u residual over all steps"),
    ("simulate.constraint_tol", "largest allowed det/divET/compat residual at the final time"),
    ("simulate.d_tol", "largest allowed d-reformulation residual at the final time"),
    ("sweep.amplitudes", "strictly ascending data amplitudes"),
    ("sweep.seeds", "seeds per amplitude, counted from the global seed"),
    ("sweep.t_final", "final time of each run"),
    ("sweep.dt", "time step of each run"),
    ("sweep.cadence", "steps between diagnostics rows"),
    ("sweep.band", "dyadic block range of the data"),
    ("sweep.flow_steps", "RK4 substeps of the deformation generator"),
    ("sweep.max_variation", "largest accepted max/min of max Y / alpha"),
    ("gen_data.amplitude", "size of each generated field"),
    ("gen_data.band", "dyadic block range [q_lo, q_hi]"),
    ("gen_data.flow_time", "deformation flow horizon (default: matched to amplitude)"),
    ("gen_data.flow_steps", "RK4 substeps of the deformation generator"),
    ("gen_data.b_min", "lower bound on 1 + a0"),
];

fn kind_of(v: &serde_json::Value) -> &'static str {
    match v {
        serde_json::Value::Null => "optional",
        serde_json::Value::Bool(_) => "bool",
        serde_json::Value::Number(n) if n.is_f64() => "float",
        serde_json::Value::Number(_) => "integer",
        serde_json::Value::String(_) => "string",
        serde_json::Value::Array(_) => "array",
        serde_json::Value::Object(_) => "table",
    }
}

/// Every key with its type, default and description, derived from the defaults.
pub fn schema() -> Vec<SchemaEntry> {
    let defaults = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    DESCRIPTIONS
        .iter()
        .map(|(key, description)| {
            let mut v = &defaults;
            for part in key.split('.') {
                v = &v[part];
            }
            SchemaEntry {
                key: key.to_string(),
                kind: kind_of(v),
                default: v.clone(),
                description,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("gird = 32").is_err());
        assert!(RunConfig::parse("[simulate]\ndtt = 0.1").is_err());
    }

    #[test]
    fn schema_covers_every_default_key() {
        let defaults = serde_json::to_value(RunConfig::default()).unwrap();
        let mut keys = Vec::new();
        for (k, v) in defaults.as_object().unwrap() {
            match v.as_object() {
                Some(table) => keys.extend(table.keys().map(|t| format!("{k}.{t}"))),
                None => keys.push(k.clone()),
            }
        }
        let documented: Vec<String> = schema().into_iter().map(|e| e.key).collect();
        keys.sort();
        let mut sorted = documented.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn validation_names_the_key() {
        let cfg = RunConfig {
            grid: 48,
            ..RunConfig::default()
        };
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("grid"), "{err}");
    }
}
