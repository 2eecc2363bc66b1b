//! Admissible initial data `(a0, u0, E0)`.
//!
//! `E0` is produced by flowing `E' + v . grad E = grad v E + grad v` from
//! `E = 0` under a frozen divergence-free `v`; the constraints on `E` are
//! preserved by that evolution, so the output is admissible up to the
//! integration error, which is certified.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::besov::{norm_from_blocks, NormSpec};
use crate::error::{precondition, Error, Result};
use crate::linear_models::stepping::combine;
use crate::spectral_field::io::write_fields;
use crate::spectral_field::multipliers::{derivative_spectrum, leray_spectra};
use crate::spectral_field::random::random_spectrum;
use crate::spectral_field::{block_norms, fields_of, Field, Grid, Spectrum, TensorField, VectorField};
use crate::viscoelastic::rhs::deformation_rates;
use crate::viscoelastic::{constraint_residuals, data_size, ConstraintResiduals, FriedrichsMask};

/// Certificate budget on every constraint residual.
pub const ADMISSIBILITY_BUDGET: f64 = 1e-8;
/// Relative tolerance of the `tau` bisection on `||E0||`.
pub const FLOW_TIME_TOL: f64 = 0.01;
const SPECTRAL_SLOPE: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub seed: u64,
    pub amplitude: f64,
    /// Dyadic block range; modes with `2^q_lo <= |k| <= 2^(q_hi + 1)` are populated.
    pub band: (i32, i32),
    /// Flow horizon for `E0`. `None` picks it so that `||E0||` matches `amplitude`.
    #[serde(default)]
    pub flow_time: Option<f64>,
    #[serde(default = "default_flow_steps")]
    pub flow_steps: usize,
    #[serde(default = "default_b_min")]
    pub b_min: f64,
}

fn default_flow_steps() -> usize {
    64
}

fn default_b_min() -> f64 {
    0.1
}

impl DataSpec {
    pub fn new(seed: u64, amplitude: f64) -> Self {
        Self {
            seed,
            amplitude,
            band: (0, 1),
            flow_time: None,
            flow_steps: default_flow_steps(),
            b_min: default_b_min(),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let cfg = |key: &str, message: String| {
            Err(Error::Config {
                key: key.into(),
                message,
            })
        };
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return cfg("amplitude", format!("must be finite and >= 0, got {}", self.amplitude));
        }
        let (lo, hi) = self.band;
        if lo < grid.q_min() || hi > grid.q_max() || lo > hi {
            return cfg(
                "band",
                format!("({lo}, {hi}) must satisfy {} <= q_lo <= q_hi <= {}", grid.q_min(), grid.q_max()),
            );
        }
        if self.flow_steps == 0 {
            return cfg("flow_steps", "must be positive".into());
        }
        if let Some(tau) = self.flow_time {
            if !(tau >= 0.0) || !tau.is_finite() {
                return cfg("flow_time", format!("must be finite and >= 0, got {tau}"));
            }
        }
        if !(self.b_min > 0.0 && self.b_min < 1.0) {
            return cfg("b_min", format!("must lie in (0, 1), got {}", self.b_min));
        }
        Ok(())
    }

    fn radii(&self) -> (f64, f64) {
        (2f64.powi(self.band.0), 2f64.powi(self.band.1 + 1))
    }
}

fn velocity_spec(dim: usize) -> NormSpec {
    NormSpec::homogeneous(dim as f64 / 2.0 - 1.0, 1.0)
}

fn density_spec(dim: usize) -> NormSpec {
    NormSpec::nonhomogeneous(dim as f64 / 2.0, 1.0)
}

fn deformation_spec(dim: usize, mu: f64) -> NormSpec {
    NormSpec::hybrid(dim as f64 / 2.0, f64::INFINITY, mu)
}

fn random_divergence_free(grid: &Grid, seed: u64, band: (f64, f64)) -> Vec<Spectrum> {
    let raw: Vec<Spectrum> = (0..grid.dim())
        .map(|i| random_spectrum(grid, seed.wrapping_add(i as u64 * 0x9E37_79B9), SPECTRAL_SLOPE, Some(band)))
        .collect();
    leray_spectra(&raw)
}

fn scaled_to(mut s: Vec<Spectrum>, spec: &NormSpec, target: f64) -> Vec<Spectrum> {
    let refs: Vec<&Spectrum> = s.iter().collect();
    let norm = norm_from_blocks(&block_norms(&refs), spec);
    let c = if norm > 0.0 { target / norm } else { 0.0 };
    for x in &mut s {
        *x = x.scaled(c);
    }
    s
}

/// Leray-projected band-limited field with `||u0||_{Bdot^{N/2-1}_{2,1}} = amplitude`.
pub fn generate_velocity(grid: &Grid, spec: &DataSpec) -> Result<VectorField> {
    spec.validate(grid)?;
    let u = random_divergence_free(grid, spec.seed.wrapping_mul(8).wrapping_add(1), spec.radii());
    Ok(VectorField::from_spectra(&scaled_to(u, &velocity_spec(grid.dim()), spec.amplitude)))
}

/// Band-limited `a0` with `||a0||_{B^{N/2}_{2,1}} = amplitude` and `inf(1 + a0) >= b_min`.
pub fn generate_density(grid: &Grid, spec: &DataSpec) -> Result<Field> {
    spec.validate(grid)?;
    if spec.amplitude >= 1.0 - spec.b_min {
        return precondition(format!(
            "density amplitude {} must be below 1 - b_min = {}",
            spec.amplitude,
            1.0 - spec.b_min
        ));
    }
    let a = random_spectrum(grid, spec.seed.wrapping_mul(8).wrapping_add(3), SPECTRAL_SLOPE, Some(spec.radii()));
    let a = scaled_to(vec![a], &density_spec(grid.dim()), spec.amplitude).remove(0).to_field();
    let floor = 1.0 + a.min();
    if floor < spec.b_min {
        return precondition(format!("inf(1 + a0) = {floor:.6} is below b_min = {}", spec.b_min));
    }
    Ok(a)
}

/// Flows `E = 0` for time `tau` under the frozen field `v` with classical RK4.
pub fn flow_deformation(v: &VectorField, tau: f64, steps: usize) -> TensorField {
    let grid = v.grid().clone();
    let mask = FriedrichsMask::new(&grid, grid.default_n_cut());
    let v = v.spectra();
    let mut e: Vec<Spectrum> = (0..grid.dim() * grid.dim()).map(|_| Spectrum::zeros(&grid)).collect();
    if tau == 0.0 {
        return TensorField::from_spectra(&e);
    }
    let h = tau / steps as f64;
    for _ in 0..steps {
        let k1 = deformation_rates(&v, &e, &mask);
        let k2 = deformation_rates(&v, &combine(&e, &[(0.5 * h, &k1)]), &mask);
        let k3 = deformation_rates(&v, &combine(&e, &[(0.5 * h, &k2)]), &mask);
        let k4 = deformation_rates(&v, &combine(&e, &[(h, &k3)]), &mask);
        e = combine(&e, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]);
    }
    TensorField::from_spectra(&e)
}

/// Unit-amplitude flow field used by [`generate_deformation`].
pub fn deformation_velocity(grid: &Grid, spec: &DataSpec) -> VectorField {
    let v = random_divergence_free(grid, spec.seed.wrapping_mul(8).wrapping_add(5), spec.radii());
    let fields = fields_of(&v.iter().collect::<Vec<_>>());
    let peak = fields.iter().map(Field::max_abs).fold(0.0, f64::max);
    let c = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    VectorField::from_spectra(&v.iter().map(|s| s.scaled(c)).collect::<Vec<_>>())
}

fn max_gradient(v: &VectorField) -> f64 {
    let s = v.spectra();
    let grads: Vec<Spectrum> = s
        .iter()
        .flat_map(|c| (0..v.dim()).map(move |j| derivative_spectrum(c, j)))
        .collect();
    fields_of(&grads.iter().collect::<Vec<_>>())
        .iter()
        .map(Field::max_abs)
        .fold(0.0, f64::max)
}

/// `E0` and the flow horizon that produced it.
#[derive(Clone, Debug)]
pub struct Deformation {
    pub e: TensorField,
    pub tau: f64,
    pub residuals: ConstraintResiduals,
}

/// `E0` either at the prescribed `flow_time` or with `tau` bisected until
/// `||E0||_{Btilde^{N/2,inf}_mu}` is within 1% of `amplitude`.
pub fn generate_deformation(grid: &Grid, spec: &DataSpec, mu: f64) -> Result<Deformation> {
    spec.validate(grid)?;
    let v = deformation_velocity(grid, spec);
    let norm_spec = deformation_spec(grid.dim(), mu);
    let size = |e: &TensorField| norm_from_blocks(&block_norms(&e.spectra().iter().collect::<Vec<_>>()), &norm_spec);
    let target = spec.amplitude;
    let (e, tau) = match spec.flow_time {
        Some(tau) => (flow_deformation(&v, tau, spec.flow_steps), tau),
        None if target == 0.0 => (TensorField::zeros(grid), 0.0),
        None => {
            let grad = max_gradient(&v);
            let mut lo = (0.0, 0.0);
            let mut tau = target / grad.max(f64::MIN_POSITIVE);
            let mut hi;
            loop {
                let e = flow_deformation(&v, tau, spec.flow_steps);
                let n = size(&e);
                if n >= target {
                    hi = (tau, n, e);
                    break;
                }
                lo = (tau, n);
                tau *= 2.0;
                if tau * grad > 1.0 {
                    return precondition(format!(
                        "deformation amplitude {target} needs tau * |grad v| > 1; lower the amplitude"
                    ));
                }
            }
            while (hi.1 - target).abs() > FLOW_TIME_TOL * target {
                let mid = 0.5 * (lo.0 + hi.0);
                let e = flow_deformation(&v, mid, spec.flow_steps);
                let n = size(&e);
                if (n - target).abs() <= FLOW_TIME_TOL * target {
                    hi = (mid, n, e);
                    break;
                }
                if n < target {
                    lo = (mid, n);
                } else {
                    hi = (mid, n, e);
                }
            }
            (hi.2, hi.0)
        }
    };
    let residuals = constraint_residuals(&e);
    let worst = residuals.det.max(residuals.div_et).max(residuals.compat);
    if worst > ADMISSIBILITY_BUDGET {
        return Err(Error::Admissibility {
            residual: worst,
            budget: ADMISSIBILITY_BUDGET,
        });
    }
    Ok(Deformation { e, tau, residuals })
}

#[derive(Clone, Debug, Serialize)]
pub struct DataNorms {
    pub velocity_bdot: f64,
    pub density_b: f64,
    pub deformation_btilde: f64,
    pub alpha: f64,
}

/// JSON companion of a generated data set.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub spec: DataSpec,
    pub dim: usize,
    pub n: usize,
    pub mu: f64,
    pub flow_time: f64,
    pub residuals: ConstraintResiduals,
    pub budget: f64,
    pub admissible: bool,
    pub norms: DataNorms,
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub a: Field,
    pub u: VectorField,
    pub e: TensorField,
    pub certificate: Certificate,
}

pub fn generate(grid: &Grid, spec: &DataSpec, mu: f64) -> Result<InitialData> {
    let u = generate_velocity(grid, spec)?;
    let a = generate_density(grid, spec)?;
    let d = generate_deformation(grid, spec, mu)?;
    let dim = grid.dim();
    let norms = DataNorms {
        velocity_bdot: norm_from_blocks(&block_norms(&u.spectra().iter().collect::<Vec<_>>()), &velocity_spec(dim)),
        density_b: norm_from_blocks(&block_norms(&[&a.spectrum()]), &density_spec(dim)),
        deformation_btilde: norm_from_blocks(
            &block_norms(&d.e.spectra().iter().collect::<Vec<_>>()),
            &deformation_spec(dim, mu),
        ),
        alpha: data_size(&a, &u, &d.e, mu),
    };
    let certificate = Certificate {
        spec: spec.clone(),
        dim,
        n: grid.n(),
        mu,
        flow_time: d.tau,
        residuals: d.residuals,
        budget: ADMISSIBILITY_BUDGET,
        admissible: true,
        norms,
    };
    Ok(InitialData {
        a,
        u,
        e: d.e,
        certificate,
    })
}

/// Writes `a0.bin`, `u0.bin`, `E0.bin` (with sidecars) and `certificate.json`.
pub fn write_initial_data(dir: &Path, data: &InitialData) -> Result<()> {
    fs::create_dir_all(dir)?;
    let dim = data.u.dim();
    write_fields(&dir.join("a0.bin"), &[&data.a], &["a"])?;
    let u_labels: Vec<String> = (0..dim).map(|i| format!("u{i}")).collect();
    write_fields(
        &dir.join("u0.bin"),
        &data.u.components().iter().collect::<Vec<_>>(),
        &u_labels.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    let e_labels: Vec<String> = (0..dim * dim).map(|ij| format!("E{}{}", ij / dim, ij % dim)).collect();
    write_fields(
        &dir.join("E0.bin"),
        &data.e.components().iter().collect::<Vec<_>>(),
        &e_labels.iter().map(String::as_str).collect::<Vec<_>>(),
    )?;
    let mut json = serde_json::to_string_pretty(&data.certificate)?;
    json.push('\n');
    fs::write(dir.join("certificate.json"), json)?;
    Ok(())
}
