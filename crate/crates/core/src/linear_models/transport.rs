//! Linear transport `d_t a + u . grad a = g` with a prescribed divergence-free
//! velocity, and the associated Besov growth estimate.

use std::collections::BTreeMap;

use super::report::{fit_constant, EstimateReport};
use super::stepping::step_plan;
use crate::besov::{norm_from_blocks, running_integral, running_time_space_norm, NormSpec, TimeSeries};
use crate::error::{precondition, Error, Result};
use crate::spectral_field::kernels::advect;
use crate::spectral_field::multipliers::{derivative_spectrum, spectral_divergence_max};
use crate::spectral_field::{block_norms, BlockNorms, Field, Spectrum, VectorField};

/// Velocity at time `t`.
pub type VelocityFn<'a> = &'a dyn Fn(f64) -> VectorField;
/// Scalar source at time `t`.
pub type SourceFn<'a> = &'a dyn Fn(f64) -> Field;

/// Default Courant cap `dt * max|u| * n / L`.
pub const DEFAULT_CFL_CAP: f64 = 0.5;
/// Tolerance on the spectral divergence of the prescribed velocity.
pub const DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct TransportOptions {
    pub dt: f64,
    /// Record a snapshot every `cadence` steps (and always at the final time).
    pub cadence: usize,
    pub cfl_cap: f64,
}

impl TransportOptions {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            cadence: 1,
            cfl_cap: DEFAULT_CFL_CAP,
        }
    }
}

pub(crate) fn courant(u: &VectorField, dt: f64) -> f64 {
    let g = u.grid();
    dt * u.max_abs() * g.n() as f64 / g.period()
}

fn check_velocity(u: &VectorField, t: f64, dt: f64, cap: f64) -> Result<Vec<Spectrum>> {
    let spectra = u.spectra();
    let div = spectral_divergence_max(&spectra);
    let scale = spectra.iter().map(Spectrum::l2_norm).fold(0.0, f64::max);
    if div > DIVERGENCE_TOL * scale.max(1.0) {
        return precondition(format!("velocity not divergence-free at t = {t}: {div:.3e}"));
    }
    let number = courant(u, dt);
    if number > cap {
        return Err(Error::Cfl { number, cap });
    }
    Ok(spectra)
}

/// RK4 integration of the transport equation; advection is dealiased.
pub fn transport_solve(
    a0: &Field,
    velocity: VelocityFn<'_>,
    source: Option<SourceFn<'_>>,
    t_final: f64,
    opts: TransportOptions,
) -> Result<TimeSeries<Field>> {
    if !(t_final > 0.0) || !(opts.dt > 0.0) || opts.cadence == 0 {
        return precondition("transport needs T > 0, dt > 0 and cadence >= 1");
    }
    let grid = a0.grid().clone();
    let (steps, h) = step_plan(t_final, opts.dt);
    let tendency = |t: f64, u: &VectorField, a: &Spectrum| -> Result<Spectrum> {
        if !u.grid().same_as(&grid) {
            return Err(Error::GridMismatch);
        }
        let mut out = -&advect(u.components(), &[a]).remove(0);
        if let Some(g) = source {
            out.axpy(1.0, &g(t).spectrum());
        }
        Ok(out)
    };
    let mut a = a0.spectrum();
    let mut series = TimeSeries::empty();
    series.push(0.0, a0.clone());
    let mut u_start = velocity(0.0);
    for n in 0..steps {
        let t = n as f64 * h;
        check_velocity(&u_start, t, h, opts.cfl_cap)?;
        let u_mid = velocity(t + 0.5 * h);
        let u_end = velocity(t + h);
        check_velocity(&u_end, t + h, h, opts.cfl_cap)?;
        let k1 = tendency(t, &u_start, &a)?;
        let k2 = tendency(t + 0.5 * h, &u_mid, &(&a + &k1.scaled(0.5 * h)))?;
        let k3 = tendency(t + 0.5 * h, &u_mid, &(&a + &k2.scaled(0.5 * h)))?;
        let k4 = tendency(t + h, &u_end, &(&a + &k3.scaled(h)))?;
        a.axpy(h / 6.0, &k1);
        a.axpy(h / 3.0, &k2);
        a.axpy(h / 3.0, &k3);
        a.axpy(h / 6.0, &k4);
        if (n + 1) % opts.cadence == 0 || n + 1 == steps {
            series.push((n + 1) as f64 * h, a.to_field());
        }
        u_start = u_end;
    }
    Ok(series)
}

/// Integrand of `V`: which velocity norm controls growth depends on `s`.
fn growth_density(u: &VectorField, s: f64, r: f64) -> f64 {
    let dim = u.dim() as f64;
    let grad: Vec<Spectrum> = u
        .spectra()
        .iter()
        .flat_map(|c| (0..u.dim()).map(move |j| derivative_spectrum(c, j)))
        .collect();
    let refs: Vec<&Spectrum> = grad.iter().collect();
    let b = block_norms(&refs);
    let critical = 1.0 + dim / 2.0;
    if s < critical {
        let besov = norm_from_blocks(&b, &NormSpec::nonhomogeneous(dim / 2.0, 1.0));
        let grad_fields = crate::spectral_field::fields_of(&refs);
        let mut sup = 0.0_f64;
        for p in 0..u.grid().len() {
            let frob: f64 = grad_fields.iter().map(|f| f.values()[p].powi(2)).sum();
            sup = sup.max(frob.sqrt());
        }
        besov + sup
    } else {
        norm_from_blocks(&b, &NormSpec::nonhomogeneous(s - 1.0, r))
    }
}

/// Checks `||a||_{Ltilde^inf_t(B^s_{2,r})} <= e^{C V(t)} (||a0|| + int_0^t e^{-C V} ||g||)`
/// at every snapshot and fits the smallest `C`.
///
/// `V(t)` integrates `||grad u||_{B^{N/2}_{2,1}} + ||grad u||_inf` below the
/// critical index `1 + N/2` and `||grad u||_{B^{s-1}_{2,r}}` above it.
#[allow(clippy::too_many_arguments)]
pub fn transport_estimate_check(
    a0: &Field,
    velocity: VelocityFn<'_>,
    source: Option<SourceFn<'_>>,
    t_final: f64,
    s: f64,
    r: f64,
    opts: TransportOptions,
    c_max: f64,
) -> Result<EstimateReport> {
    let dim = a0.grid().dim() as f64;
    let critical = 1.0 + dim / 2.0;
    if !(s > -dim / 2.0) {
        return precondition(format!("regularity s = {s} must exceed -N/2 = {}", -dim / 2.0));
    }
    if s == critical && r != 1.0 {
        return precondition(format!("s = 1 + N/2 requires r = 1, got r = {r}"));
    }
    let series = transport_solve(a0, velocity, source, t_final, opts)?;
    let spec = NormSpec::nonhomogeneous(s, r);
    let times = &series.times;
    let blocks: Vec<BlockNorms> = series
        .snapshots
        .iter()
        .map(|f| block_norms(&[&f.spectrum()]))
        .collect();
    let lhs = running_time_space_norm(times, &blocks, &spec.with_rho(f64::INFINITY))?;
    let density: Vec<f64> = times.iter().map(|&t| growth_density(&velocity(t), s, r)).collect();
    let v = running_integral(times, &density);
    let g_norm: Vec<f64> = match source {
        Some(g) => times
            .iter()
            .map(|&t| norm_from_blocks(&block_norms(&[&g(t).spectrum()]), &spec))
            .collect(),
        None => vec![0.0; times.len()],
    };
    let a0_norm = norm_from_blocks(&blocks[0], &spec);
    let rhs = |i: usize, c: f64| -> f64 {
        let weighted: Vec<f64> = (0..=i).map(|j| (-c * v[j]).exp() * g_norm[j]).collect();
        let src = running_integral(&times[..=i], &weighted)[i];
        (c * v[i]).exp() * (a0_norm + src)
    };
    let fitted = fit_constant(&lhs, rhs);
    let last = times.len() - 1;
    let c_eval = if fitted.is_finite() { fitted } else { c_max };
    let growth = (c_eval * v[last]).exp();
    let weighted: Vec<f64> = (0..=last).map(|j| (-c_eval * v[j]).exp() * g_norm[j]).collect();
    let src = growth * running_integral(times, &weighted)[last];
    let mut rhs_components = BTreeMap::new();
    rhs_components.insert("initial".to_string(), growth * a0_norm);
    rhs_components.insert("source".to_string(), src);
    let total: f64 = rhs_components.values().sum();
    let mut extras = BTreeMap::new();
    extras.insert("V_T".to_string(), v[last]);
    extras.insert("snapshots".to_string(), times.len() as f64);
    extras.insert("final_norm".to_string(), norm_from_blocks(&blocks[last], &spec));
    Ok(EstimateReport {
        name: "transport".into(),
        lhs: lhs[last],
        ratio: if total > 0.0 { lhs[last] / total } else { f64::INFINITY },
        rhs_components,
        fitted_c: fitted,
        c_max,
        pass: fitted <= c_max,
        extras,
        flags: BTreeMap::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_field::Grid;

    #[test]
    fn constant_velocity_translates() {
        let g = Grid::new(2, 32).unwrap();
        let a0 = Field::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + 0.5 * (3.0 * x[0]).cos());
        let c = [0.7, -0.4];
        let u = |_t: f64| {
            VectorField::new(vec![Field::constant(&g, c[0]), Field::constant(&g, c[1])]).unwrap()
        };
        let t_final = 1.0;
        let out = transport_solve(&a0, &u, None, t_final, TransportOptions::new(0.01)).unwrap();
        let exact = Field::from_fn(&g, |x| {
            let (y0, y1) = (x[0] - c[0] * t_final, x[1] - c[1] * t_final);
            (y0 + 2.0 * y1).sin() + 0.5 * (3.0 * y0).cos()
        });
        assert!((out.last().unwrap() - &exact).max_abs() < 1e-8);
        assert_eq!(out.len(), 101);
    }

    #[test]
    fn rejects_large_courant_number() {
        let g = Grid::new(2, 32).unwrap();
        let u = |_t: f64| VectorField::new(vec![Field::constant(&g, 10.0), Field::zeros(&g)]).unwrap();
        let err = transport_solve(&Field::zeros(&g), &u, None, 1.0, TransportOptions::new(0.1));
        assert!(matches!(err, Err(Error::Cfl { .. })));
    }

    #[test]
    fn rejects_compressible_velocity() {
        let g = Grid::new(2, 32).unwrap();
        let u = |_t: f64| VectorField::new(vec![Field::from_fn(&g, |x| x[0].sin()), Field::zeros(&g)]).unwrap();
        assert!(transport_solve(&Field::zeros(&g), &u, None, 0.1, TransportOptions::new(0.01)).is_err());
    }

    #[test]
    fn refuses_critical_index_without_r_one() {
        let g = Grid::new(2, 32).unwrap();
        let u = |_t: f64| VectorField::zeros(&g);
        let a0 = Field::zeros(&g);
        assert!(transport_estimate_check(&a0, &u, None, 0.1, 2.0, 2.0, TransportOptions::new(0.01), 10.0).is_err());
        assert!(transport_estimate_check(&a0, &u, None, 0.1, 2.0, 1.0, TransportOptions::new(0.01), 10.0).is_ok());
    }
}
