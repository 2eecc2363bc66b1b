//! Variable-coefficient pressure, Stokes heat flow and the linearized momentum
//! equation `d_t u + v . grad u - mu b Lap u + b grad Pi = f`, `div u = 0`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::{fit_constant, EstimateReport};
use super::stepping::{step_plan, Lawson, State};
use super::transport::VelocityFn;
use crate::besov::{norm_from_blocks, running_integral, running_time_space_norm, NormSpec, TimeSeries};
use crate::error::{precondition, Error, Result};
use crate::spectral_field::dyadic::low_pass_spectrum;
use crate::spectral_field::kernels::{advect, multiply};
use crate::spectral_field::multipliers::{
    dealias_spectrum, derivative_spectrum, div_spectra, gradient_part_spectra, laplacian_spectrum,
    leray_spectra, spectral_divergence_max,
};
use crate::spectral_field::{block_norms, BlockNorms, Field, Spectrum, VectorField};

/// Vector forcing at time `t`.
pub type ForcingFn<'a> = &'a dyn Fn(f64) -> VectorField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureOptions {
    /// Relative tolerance on the masked divergence residual.
    pub tol: f64,
    pub max_iter: usize,
    /// Largest admissible `||a||_inf`.
    pub a_max: f64,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            a_max: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PressureSolution {
    pub grad_pi: VectorField,
    pub iterations: usize,
    /// Final `||M div(L - (1 + a) grad Pi)|| / ||M div L||`.
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

pub(crate) struct SpectralPressure {
    pub grad_pi: Vec<Spectrum>,
    /// `M(a grad Pi)` for the returned iterate.
    pub a_grad_pi: Vec<Spectrum>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

fn vec_norm(v: &[Spectrum]) -> f64 {
    v.iter().map(|s| s.l2_norm().powi(2)).sum::<f64>().sqrt()
}

/// Fixed point `G_{k+1} = Q M (L - a G_k)` for `div((1 + a) G) = div L`.
///
/// Since `div G_{k+1} = div M(L - a G_k)`, the residual of `G_{k+1}` is
/// `||div(W_k - W_{k+1})||` with `W = M(a G)`, so each iteration costs one product.
pub(crate) fn pressure_spectral(
    a: &Field,
    l: &[Spectrum],
    guess: Option<&[Spectrum]>,
    opts: &PressureOptions,
) -> Result<SpectralPressure> {
    let a_inf = a.max_abs();
    if a_inf > opts.a_max {
        return precondition(format!(
            "pressure solve needs ||a||_inf <= {}, got {a_inf:.6}",
            opts.a_max
        ));
    }
    let grid = a.grid();
    let l: Vec<Spectrum> = l.iter().map(dealias_spectrum).collect();
    let reference = div_spectra(&l).l2_norm();
    let zeros = || vec![Spectrum::zeros(grid); grid.dim()];
    if reference == 0.0 {
        return Ok(SpectralPressure {
            grad_pi: zeros(),
            a_grad_pi: zeros(),
            iterations: 0,
            residual: 0.0,
            history: Vec::new(),
        });
    }
    let trivial = a_inf == 0.0;
    let product = |g: &[Spectrum]| -> Vec<Spectrum> {
        if trivial {
            zeros()
        } else {
            multiply(a, &g.iter().collect::<Vec<_>>())
        }
    };
    let mut w = match guess {
        Some(g) => product(g),
        None => zeros(),
    };
    let mut history = Vec::new();
    for k in 1..=opts.max_iter {
        let rhs: Vec<Spectrum> = l.iter().zip(&w).map(|(x, y)| x - y).collect();
        let g = gradient_part_spectra(&rhs);
        let w_next = product(&g);
        let diff: Vec<Spectrum> = w.iter().zip(&w_next).map(|(x, y)| x - y).collect();
        let residual = div_spectra(&diff).l2_norm() / reference;
        history.push(residual);
        w = w_next;
        if residual <= opts.tol {
            return Ok(SpectralPressure {
                grad_pi: g,
                a_grad_pi: w,
                iterations: k,
                residual,
                history,
            });
        }
    }
    Err(Error::PressureNonconvergence {
        iterations: opts.max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
    })
}

/// Gradient `grad Pi` with `div((1 + a) grad Pi) = div L` on the dealiased modes.
pub fn elliptic_pressure_solve(a: &Field, l: &VectorField, opts: &PressureOptions) -> Result<PressureSolution> {
    if !a.grid().same_as(l.grid()) {
        return Err(Error::GridMismatch);
    }
    let sol = pressure_spectral(a, &l.spectra(), None, opts)?;
    Ok(PressureSolution {
        grad_pi: VectorField::from_spectra(&sol.grad_pi),
        iterations: sol.iterations,
        residual: sol.residual,
        residual_history: sol.history,
    })
}

#[derive(Clone, Debug)]
pub struct StokesSolution {
    pub u: TimeSeries<VectorField>,
    /// Always zero: the heat flow of divergence-free data needs no pressure.
    pub grad_pi: TimeSeries<VectorField>,
    /// True when the data had to be Leray-projected first.
    pub projected: bool,
}

/// Exact constant-coefficient Stokes flow `u_hat(t) = e^{-mu |xi|^2 t} P u0_hat`.
pub fn stokes_heat_solve(u0: &VectorField, mu: f64, times: &[f64]) -> Result<StokesSolution> {
    if !(mu > 0.0) {
        return precondition(format!("viscosity must be positive, got {mu}"));
    }
    let raw = u0.spectra();
    let scale = vec_norm(&raw);
    let projected = spectral_divergence_max(&raw) > 1e-10 * scale.max(1.0);
    let data = if projected { leray_spectra(&raw) } else { raw };
    let xn = &u0.grid().modes().xi_norm;
    let snaps: Vec<VectorField> = times
        .iter()
        .map(|&t| {
            let s: Vec<Spectrum> = data
                .iter()
                .map(|c| c.scale_by(|k| (-mu * xn[k] * xn[k] * t).exp()))
                .collect();
            VectorField::from_spectra(&s)
        })
        .collect();
    let zero = VectorField::zeros(u0.grid());
    Ok(StokesSolution {
        u: TimeSeries::new(times.to_vec(), snaps)?,
        grad_pi: TimeSeries::new(times.to_vec(), vec![zero; times.len()])?,
        projected,
    })
}

/// Inputs of the linearized momentum equation; `b` is frozen in time.
#[derive(Clone, Copy)]
pub struct MomentumProblem<'a> {
    pub u0: &'a VectorField,
    pub b: &'a Field,
    pub mu: f64,
    pub velocity: Option<VelocityFn<'a>>,
    pub forcing: Option<ForcingFn<'a>>,
    pub t_final: f64,
    pub dt: f64,
    pub cadence: usize,
    /// Required lower bound on `inf b`.
    pub b_min: f64,
    pub pressure: PressureOptions,
}

impl<'a> MomentumProblem<'a> {
    pub fn new(u0: &'a VectorField, b: &'a Field, mu: f64, t_final: f64, dt: f64) -> Self {
        Self {
            u0,
            b,
            mu,
            velocity: None,
            forcing: None,
            t_final,
            dt,
            cadence: 1,
            b_min: 0.1,
            pressure: PressureOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MomentumRun {
    pub u: TimeSeries<VectorField>,
    pub grad_pi: TimeSeries<VectorField>,
    pub max_pressure_iterations: usize,
}

/// Reference coefficient and relative perturbation: `b = b_ref (1 + a')`.
fn split_coefficient(b: &Field) -> (f64, Field) {
    let b_ref = 0.5 * (b.min() + b.values().iter().fold(f64::MIN, |m, &x| m.max(x)));
    (b_ref, b.map(|x| x / b_ref - 1.0))
}

/// Lawson RK4 with integrating factor `e^{-mu b_ref |xi|^2 dt}`; the pressure is
/// recomputed at every stage so that `b grad Pi` keeps `u` divergence-free.
pub fn linearized_momentum_solve(p: &MomentumProblem<'_>) -> Result<MomentumRun> {
    if !(p.mu > 0.0) || !(p.t_final > 0.0) || !(p.dt > 0.0) || p.cadence == 0 {
        return precondition("momentum solve needs mu, T, dt > 0 and cadence >= 1");
    }
    let grid = p.u0.grid().clone();
    if !p.b.grid().same_as(&grid) {
        return Err(Error::GridMismatch);
    }
    let b_inf = p.b.min();
    if b_inf < p.b_min {
        return precondition(format!("inf b = {b_inf:.6} is below {}", p.b_min));
    }
    let raw = p.u0.spectra();
    if spectral_divergence_max(&raw) > 1e-10 * vec_norm(&raw).max(1.0) {
        return precondition("initial velocity must be divergence-free");
    }
    let (b_ref, a_rel) = split_coefficient(p.b);
    let xn = &grid.modes().xi_norm;
    let rate: Vec<f64> = xn.iter().map(|x| -p.mu * b_ref * x * x).collect();
    let stepper = Lawson {
        rates: vec![Some(rate); grid.dim()],
    };
    let mut max_iters = 0usize;
    let mut warm: Option<Vec<Spectrum>> = None;
    // Returns (tendency, grad Pi).
    let mut evaluate = |t: f64, u: &[Spectrum], warm: &mut Option<Vec<Spectrum>>| -> Result<(State, Vec<Spectrum>)> {
        let lap: Vec<Spectrum> = u.iter().map(laplacian_spectrum).collect();
        let mut l = multiply(p.b, &lap.iter().collect::<Vec<_>>());
        for s in &mut l {
            *s = s.scaled(p.mu);
        }
        if let Some(v) = p.velocity {
            let adv = advect(v(t).components(), &u.iter().collect::<Vec<_>>());
            for (x, y) in l.iter_mut().zip(&adv) {
                x.axpy(-1.0, y);
            }
        }
        if let Some(f) = p.forcing {
            for (x, y) in l.iter_mut().zip(f(t).spectra()) {
                x.axpy(1.0, &dealias_spectrum(&y));
            }
        }
        let scaled: Vec<Spectrum> = l.iter().map(|s| s.scaled(1.0 / b_ref)).collect();
        let sol = pressure_spectral(&a_rel, &scaled, warm.as_deref(), &p.pressure)?;
        max_iters = max_iters.max(sol.iterations);
        let mut rest = l;
        for ((x, g), w) in rest.iter_mut().zip(&sol.grad_pi).zip(&sol.a_grad_pi) {
            x.axpy(-b_ref, g);
            x.axpy(-b_ref, w);
        }
        let mut out = leray_spectra(&rest);
        for (x, d) in out.iter_mut().zip(&lap) {
            x.axpy(-p.mu * b_ref, d);
        }
        *warm = Some(sol.grad_pi.clone());
        Ok((out, sol.grad_pi))
    };
    let (steps, h) = step_plan(p.t_final, p.dt);
    let mut u: State = raw;
    let mut us = TimeSeries::empty();
    let mut pis = TimeSeries::empty();
    let (_, g0) = evaluate(0.0, &u, &mut warm)?;
    us.push(0.0, VectorField::from_spectra(&u));
    pis.push(0.0, VectorField::from_spectra(&g0));
    for n in 0..steps {
        let t = n as f64 * h;
        u = stepper.step(&u, t, h, |tt, y| Ok(evaluate(tt, y, &mut warm)?.0))?;
        if (n + 1) % p.cadence == 0 || n + 1 == steps {
            let t1 = (n + 1) as f64 * h;
            let (_, g) = evaluate(t1, &u, &mut warm)?;
            us.push(t1, VectorField::from_spectra(&u));
            pis.push(t1, VectorField::from_spectra(&g));
        }
    }
    Ok(MomentumRun {
        u: us,
        grad_pi: pis,
        max_pressure_iterations: max_iters,
    })
}

/// Parameters of the momentum estimate check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateCheckConfig {
    pub s: f64,
    pub r: f64,
    pub alpha: f64,
    /// Low-frequency cut `N0`; `None` selects the smallest admissible one.
    pub n0: Option<u32>,
    pub c_max: f64,
    /// Exponent in the smallness condition; defaults to `k = |s - 1| / alpha`.
    pub kappa: Option<f64>,
}

impl EstimateCheckConfig {
    pub fn new(s: f64, r: f64, alpha: f64, c_max: f64) -> Self {
        Self {
            s,
            r,
            alpha,
            n0: None,
            c_max,
            kappa: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let h = dim as f64 / 2.0;
        let bad = |key: &str, message: String| Err(Error::Config { key: key.into(), message });
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.s > 1.0 - h && self.s < 1.0 + h) {
            return bad("s", format!("must lie in ({}, {}), got {}", 1.0 - h, 1.0 + h, self.s));
        }
        if self.s > 1.0 && !(self.alpha < (self.s - 1.0) / 2.0) {
            return bad("alpha", format!("must be below (s - 1)/2 = {}", (self.s - 1.0) / 2.0));
        }
        if !(self.r >= 1.0) {
            return bad("r", format!("must be >= 1, got {}", self.r));
        }
        if !(self.c_max > 0.0) {
            return bad("c_max", format!("must be positive, got {}", self.c_max));
        }
        if self.n0 == Some(0) {
            return bad("n0", "must be a positive integer".into());
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        (self.s - 1.0).abs() / self.alpha
    }
}

/// Smallest `N0 >= 1` with `inf(1 + S_{N0} a) >= b_lower / 2`.
pub fn select_n0(a: &Field, b_lower: f64) -> u32 {
    let spec = a.spectrum();
    let top = a.grid().q_max() + 2;
    for n0 in 1..=top {
        let low = low_pass_spectrum(&spec, n0).to_field();
        if low.min() + 1.0 >= 0.5 * b_lower {
            return n0 as u32;
        }
    }
    top as u32
}

fn blocks_of(s: &[Spectrum]) -> BlockNorms {
    block_norms(&s.iter().collect::<Vec<_>>())
}

/// Evaluates both sides of the linearized momentum estimate on a run and fits
/// the smallest `C` in `C e^{C V(t)} (...)` valid at every snapshot.
pub fn momentum_estimate_check(
    problem: &MomentumProblem<'_>,
    run: &MomentumRun,
    cfg: &EstimateCheckConfig,
) -> Result<EstimateReport> {
    let grid = problem.u0.grid();
    let dim = grid.dim();
    cfg.validate(dim)?;
    let h = dim as f64 / 2.0;
    let times = &run.u.times;
    let last = times.len() - 1;
    let mu = problem.mu;
    let b_lower = problem.b.min();
    let mu_lower = mu * b_lower;
    let a = problem.b.map(|x| x - 1.0);
    let n0 = cfg.n0.unwrap_or_else(|| select_n0(&a, b_lower));
    let k = cfg.k();
    let kappa = cfg.kappa.unwrap_or(k);

    let nh = |s: f64, r: f64| NormSpec::nonhomogeneous(s, r);
    let u_blocks: Vec<BlockNorms> = run.u.snapshots.iter().map(|u| blocks_of(&u.spectra())).collect();
    let p_blocks: Vec<BlockNorms> = run.grad_pi.snapshots.iter().map(|g| blocks_of(&g.spectra())).collect();
    let sup_u = running_time_space_norm(times, &u_blocks, &nh(cfg.s - 1.0, cfg.r).with_rho(f64::INFINITY))?;
    let int_u = running_time_space_norm(times, &u_blocks, &nh(cfg.s + 1.0, cfg.r).with_rho(1.0))?;
    let int_p = running_time_space_norm(times, &p_blocks, &nh(cfg.s - 1.0, cfg.r).with_rho(1.0))?;
    let lhs: Vec<f64> = (0..times.len())
        .map(|i| sup_u[i] + mu_lower * int_u[i] + int_p[i])
        .collect();

    let b_spec = problem.b.spectrum();
    let grad_b: Vec<Spectrum> = (0..dim).map(|j| derivative_spectrum(&b_spec, j)).collect();
    let grad_b_norm = norm_from_blocks(&blocks_of(&grad_b), &nh(h - 1.0, 1.0));
    let a_t = 1.0 + b_lower * 2f64.powf(n0 as f64 * cfg.alpha) * grad_b_norm;

    let a_spec = a.spectrum();
    let a_norm = norm_from_blocks(&block_norms(&[&a_spec]), &nh(h, 1.0));
    let a_term = 2f64.powi(2 * n0 as i32) * a_norm.powf(2.0 / cfg.alpha);
    let grad_v_norm = |t: f64| -> f64 {
        match problem.velocity {
            None => 0.0,
            Some(v) => {
                let g: Vec<Spectrum> = v(t)
                    .spectra()
                    .iter()
                    .flat_map(|c| (0..dim).map(move |j| derivative_spectrum(c, j)))
                    .collect();
                norm_from_blocks(&blocks_of(&g), &nh(h, 1.0))
            }
        }
    };
    let density: Vec<f64> = times.iter().map(|&t| grad_v_norm(t) + a_term).collect();
    let v = running_integral(times, &density);

    let f_norm: Vec<f64> = match problem.forcing {
        None => vec![0.0; times.len()],
        Some(f) => times
            .iter()
            .map(|&t| norm_from_blocks(&blocks_of(&f(t).spectra()), &nh(cfg.s - 1.0, 1.0)))
            .collect(),
    };
    let f_int = running_integral(times, &f_norm);
    let lower: Vec<f64> = u_blocks
        .iter()
        .map(|b| norm_from_blocks(b, &nh(cfg.s + 1.0 - cfg.alpha, cfg.r)))
        .collect();
    let lower_int = running_integral(times, &lower);
    let u0_norm = norm_from_blocks(&u_blocks[0], &nh(cfg.s - 1.0, cfg.r));
    let a_k = a_t.powf(k);
    let data = |i: usize| (u0_norm, a_k * f_int[i], a_k * mu * a_t * lower_int[i]);
    let fitted = fit_constant(&lhs, |i, c| {
        let (x, y, z) = data(i);
        c * (c * v[i]).exp() * (x + y + z)
    });
    let c_eval = if fitted.is_finite() { fitted } else { cfg.c_max };
    let growth = c_eval * (c_eval * v[last]).exp();
    let (x, y, z) = data(last);
    let mut rhs_components = BTreeMap::new();
    rhs_components.insert("initial".to_string(), growth * x);
    rhs_components.insert("forcing".to_string(), growth * y);
    rhs_components.insert("lower_order".to_string(), growth * z);
    let total: f64 = rhs_components.values().sum();

    let high_a = &a_spec - &low_pass_spectrum(&a_spec, n0 as i32);
    let smallness_lhs = a_t.powf(kappa + 1.0) * norm_from_blocks(&block_norms(&[&high_a]), &nh(h, 1.0));
    let smallness_rhs = (0.25 * b_lower).min(mu_lower / (4.0 * mu));
    let mut extras = BTreeMap::new();
    extras.insert("A_T".to_string(), a_t);
    extras.insert("V_T".to_string(), v[last]);
    extras.insert("N0".to_string(), n0 as f64);
    extras.insert("k".to_string(), k);
    extras.insert("kappa".to_string(), kappa);
    extras.insert("b_lower".to_string(), b_lower);
    extras.insert("smallness_lhs".to_string(), smallness_lhs);
    extras.insert("smallness_rhs".to_string(), smallness_rhs);
    let mut flags = BTreeMap::new();
    flags.insert("smallness_holds".to_string(), smallness_lhs <= smallness_rhs);
    let lhs_final = lhs[last];
    Ok(EstimateReport {
        name: "linearized_momentum".into(),
        lhs: lhs_final,
        ratio: if total > 0.0 { lhs_final / total } else if lhs_final == 0.0 { 0.0 } else { f64::INFINITY },
        rhs_components,
        fitted_c: fitted,
        c_max: cfg.c_max,
        pass: fitted <= cfg.c_max,
        extras,
        flags,
    })
}
