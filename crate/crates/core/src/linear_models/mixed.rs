//! The constant-coefficient mixed system, per Fourier mode with `x = |xi|`:
//! `E' = -x d + F`, `d' = -mu x^2 d + x E + H`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use super::report::EstimateReport;
use crate::besov::{norm_from_blocks, running_integral, NormSpec, TimeSeries};
use crate::error::{precondition, Result};
use crate::spectral_field::{block_norms, Spectrum, TensorField};

/// Mode state `(E_hat, d_hat)`.
pub type ModeState = [Complex64; 2];

/// Scalar forcing spectra `(F_hat(t), H_hat(t))` for one mode.
pub type ModeForcing<'a> = &'a dyn Fn(f64) -> ModeState;

/// Real 2x2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

fn mat_vec(m: &Mat2, v: &ModeState) -> ModeState {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Both roots of `lambda^2 + mu x^2 lambda + x^2 = 0`, ordered (slow, fast).
/// In the oscillatory regime the pair is complex conjugate (positive imaginary part first).
pub fn mode_eigenvalues(mu: f64, x: f64) -> [Complex64; 2] {
    let tr = -mu * x * x;
    let disc = mu * mu * x.powi(4) - 4.0 * x * x;
    if x == 0.0 {
        return [Complex64::default(); 2];
    }
    if disc >= 0.0 {
        let fast = 0.5 * (tr - disc.sqrt());
        let slow = x * x / fast;
        [Complex64::new(slow, 0.0), Complex64::new(fast, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im)]
    }
}

/// `exp(M t)` for `M = [[0, -x], [x, -mu x^2]]`, written as
/// `e^{tau t/2} (cosh(w t) I + sinh(w t)/w (M - tau/2 I))` with `w^2 = tau^2/4 - x^2`.
pub fn mode_exponential(mu: f64, x: f64, t: f64) -> Mat2 {
    let tau = -mu * x * x;
    let w2 = 0.25 * tau * tau - x * x;
    let z = w2 * t * t;
    // c = e^{tau t/2} cosh(w t), sw = e^{tau t/2} sinh(w t)/w
    let (c, sw) = if z.abs() < 1.0 {
        let mut term_c = 1.0;
        let mut term_s = t;
        let (mut sc, mut ss) = (0.0, 0.0);
        for k in 0..40 {
            sc += term_c;
            ss += term_s;
            let kf = k as f64;
            term_c *= z / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            term_s *= z / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
            if term_c.abs() < 1e-18 * sc.abs() && term_s.abs() < 1e-18 * ss.abs() {
                break;
            }
        }
        let e = (0.5 * tau * t).exp();
        (e * sc, e * ss)
    } else if w2 > 0.0 {
        let [slow, fast] = mode_eigenvalues(mu, x);
        let (es, ef) = ((slow.re * t).exp(), (fast.re * t).exp());
        (0.5 * (es + ef), (es - ef) / (slow.re - fast.re))
    } else {
        let om = (-w2).sqrt();
        let e = (0.5 * tau * t).exp();
        (e * (om * t).cos(), e * (om * t).sin() / om)
    };
    [
        [c + sw * (-0.5 * tau), sw * (-x)],
        [sw * x, c + sw * (tau - 0.5 * tau)],
    ]
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Duhamel substep bound: resolves the fastest decay and caps the step at 0.05.
pub fn duhamel_step(mu: f64, x: f64) -> f64 {
    let fast = mode_eigenvalues(mu, x)[1].norm();
    (0.5 / fast.max(1.0)).min(0.05)
}

/// Trajectory of one mode at the requested (nondecreasing, nonnegative) times.
/// The homogeneous part is exact; forcing enters through 4-point Gauss Duhamel
/// quadrature on substeps of length at most [`duhamel_step`].
pub fn mixed_solve_mode(
    mu: f64,
    x: f64,
    state: ModeState,
    forcing: Option<ModeForcing<'_>>,
    times: &[f64],
) -> Vec<ModeState> {
    let mut out = Vec::with_capacity(times.len());
    let Some(g) = forcing else {
        for &t in times {
            out.push(mat_vec(&mode_exponential(mu, x, t), &state));
        }
        return out;
    };
    let h_max = duhamel_step(mu, x);
    let mut t = 0.0;
    let mut y = state;
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let steps = (span / h_max).ceil() as usize;
            let h = span / steps as f64;
            let prop = mode_exponential(mu, x, h);
            let kernels: Vec<Mat2> = GAUSS_NODES
                .iter()
                .map(|&node| mode_exponential(mu, x, h - 0.5 * h * (node + 1.0)))
                .collect();
            for n in 0..steps {
                let t0 = t + n as f64 * h;
                let mut next = mat_vec(&prop, &y);
                for (i, &node) in GAUSS_NODES.iter().enumerate() {
                    let sigma = 0.5 * h * (node + 1.0);
                    let v = mat_vec(&kernels[i], &g(t0 + sigma));
                    let w = 0.5 * h * GAUSS_WEIGHTS[i];
                    next[0] += v[0] * w;
                    next[1] += v[1] * w;
                }
                y = next;
            }
            t = target;
        }
        out.push(y);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Degenerate,
    Oscillatory,
    Critical,
    Overdamped,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Degenerate => "degenerate",
            Regime::Oscillatory => "oscillatory",
            Regime::Critical => "critical",
            Regime::Overdamped => "overdamped",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub xi: f64,
    pub lambda_slow: [f64; 2],
    pub lambda_fast: [f64; 2],
    pub regime: Regime,
}

/// Eigenvalues and regime per `|xi|`; the boundary sits at `|xi| = 2/mu`.
pub fn mixed_decay_spectrum(mu: f64, xis: &[f64]) -> Vec<DecayRow> {
    let boundary = 2.0 / mu;
    xis.iter()
        .map(|&x| {
            let [a, b] = mode_eigenvalues(mu, x);
            let regime = if x == 0.0 {
                Regime::Degenerate
            } else if (x - boundary).abs() <= 1e-12 * boundary {
                Regime::Critical
            } else if x < boundary {
                Regime::Oscillatory
            } else {
                Regime::Overdamped
            };
            DecayRow {
                xi: x,
                lambda_slow: [a.re, a.im],
                lambda_fast: [b.re, b.im],
                regime,
            }
        })
        .collect()
}

pub const DECAY_CSV_HEADER: &str = "xi,re_lambda_slow,im_lambda_slow,re_lambda_fast,im_lambda_fast,regime";

pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from(DECAY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.xi,
            r.lambda_slow[0],
            r.lambda_slow[1],
            r.lambda_fast[0],
            r.lambda_fast[1],
            r.regime.as_str()
        );
    }
    out
}

/// Tensor forcing `(F(t), H(t))`.
pub type TensorForcing<'a> = &'a dyn Fn(f64) -> (TensorField, TensorField);

#[derive(Clone, Debug)]
pub struct MixedRun {
    pub mu: f64,
    pub e: TimeSeries<TensorField>,
    pub d: TimeSeries<TensorField>,
}

/// Applies the mode solver at every grid mode, componentwise in `(i, j)`.
/// With forcing, all modes share substeps of the finest mode's length so the
/// forcing is transformed once per Gauss node.
pub fn mixed_field_solve(
    e0: &TensorField,
    d0: &TensorField,
    mu: f64,
    forcing: Option<TensorForcing<'_>>,
    times: &[f64],
) -> Result<MixedRun> {
    if !e0.grid().same_as(d0.grid()) {
        return Err(crate::error::Error::GridMismatch);
    }
    if !(mu > 0.0) {
        return precondition(format!("viscosity must be positive, got {mu}"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return precondition("output times must be nonnegative and nondecreasing");
    }
    let grid = e0.grid().clone();
    let xn = grid.modes().xi_norm.clone();
    let mut es = e0.spectra();
    let mut ds = d0.spectra();
    let advance = |es: &mut [Spectrum], ds: &mut [Spectrum], h: f64| {
        let props: Vec<Mat2> = xn.iter().map(|&x| mode_exponential(mu, x, h)).collect();
        for (e, d) in es.iter_mut().zip(ds.iter_mut()) {
            let (ec, dc) = (e.coefs_mut(), d.coefs_mut());
            for k in 0..xn.len() {
                let y = mat_vec(&props[k], &[ec[k], dc[k]]);
                ec[k] = y[0];
                dc[k] = y[1];
            }
        }
    };
    let mut e_series = TimeSeries::empty();
    let mut d_series = TimeSeries::empty();
    let mut t = 0.0;
    let max_x = xn.iter().fold(0.0_f64, |m, &x| m.max(x));
    let h_max = xn
        .iter()
        .map(|&x| duhamel_step(mu, x))
        .fold(duhamel_step(mu, max_x), f64::min);
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            match forcing {
                None => advance(&mut es, &mut ds, span),
                Some(g) => {
                    let steps = (span / h_max).ceil() as usize;
                    let h = span / steps as f64;
                    let kernels: Vec<Vec<Mat2>> = GAUSS_NODES
                        .iter()
                        .map(|&node| {
                            let lag = h - 0.5 * h * (node + 1.0);
                            xn.iter().map(|&x| mode_exponential(mu, x, lag)).collect()
                        })
                        .collect();
                    for n in 0..steps {
                        let t0 = t + n as f64 * h;
                        let mut acc_e: Vec<Spectrum> = es.iter().map(|s| Spectrum::zeros(s.grid())).collect();
                        let mut acc_d = acc_e.clone();
                        for (i, &node) in GAUSS_NODES.iter().enumerate() {
                            let (f, hh) = g(t0 + 0.5 * h * (node + 1.0));
                            let w = 0.5 * h * GAUSS_WEIGHTS[i];
                            for ((ae, ad), (fs, hs)) in acc_e
                                .iter_mut()
                                .zip(acc_d.iter_mut())
                                .zip(f.spectra().iter().zip(hh.spectra().iter()))
                            {
                                let (ac, dc) = (ae.coefs_mut(), ad.coefs_mut());
                                for k in 0..xn.len() {
                                    let v = mat_vec(&kernels[i][k], &[fs.coefs()[k], hs.coefs()[k]]);
                                    ac[k] += v[0] * w;
                                    dc[k] += v[1] * w;
                                }
                            }
                        }
                        advance(&mut es, &mut ds, h);
                        for (x, y) in es.iter_mut().zip(&acc_e) {
                            x.axpy(1.0, y);
                        }
                        for (x, y) in ds.iter_mut().zip(&acc_d) {
                            x.axpy(1.0, y);
                        }
                    }
                }
            }
            t = target;
        }
        let (ef, df) = (TensorField::from_spectra(&es), TensorField::from_spectra(&ds));
        if e_series.times.last() == Some(&target) {
            continue;
        }
        e_series.push(target, ef);
        d_series.push(target, df);
    }
    Ok(MixedRun {
        mu,
        e: e_series,
        d: d_series,
    })
}

/// Checks, with the transport term absent (`V = 0`),
/// `||E(t)||_{Btilde^{s,inf}} + ||d(t)||_{Bdot^{s-1}} + mu int_0^t (||E||_{Btilde^{s,1}} + ||d||_{Bdot^{s+1}})
///   <= C (||E0||_{Btilde^{s,inf}} + ||d0||_{Bdot^{s-1}} + mu int_0^t (||F||_{Btilde^{s,inf}} + ||H||_{Bdot^{s-1}}))`
/// at every snapshot; `C` is the largest observed ratio.
pub fn mixed_estimate_check(
    run: &MixedRun,
    forcing: Option<TensorForcing<'_>>,
    s: f64,
    c_max: f64,
) -> Result<EstimateReport> {
    let Some(first) = run.e.snapshots.first() else {
        return precondition("empty run");
    };
    let dim = first.dim() as f64;
    if !(s > 1.0 - dim / 2.0 && s <= 1.0 + dim / 2.0) {
        return precondition(format!("s = {s} outside (1 - N/2, 1 + N/2]"));
    }
    let mu = run.mu;
    let e_inf = NormSpec::hybrid(s, f64::INFINITY, mu);
    let e_one = NormSpec::hybrid(s, 1.0, mu);
    let d_low = NormSpec::homogeneous(s - 1.0, 1.0);
    let d_high = NormSpec::homogeneous(s + 1.0, 1.0);
    let norm = |t: &TensorField, spec: &NormSpec| {
        let sp = t.spectra();
        norm_from_blocks(&block_norms(&sp.iter().collect::<Vec<_>>()), spec)
    };
    let times = &run.e.times;
    let pointwise: Vec<f64> = run
        .e
        .snapshots
        .iter()
        .zip(&run.d.snapshots)
        .map(|(e, d)| norm(e, &e_inf) + norm(d, &d_low))
        .collect();
    let dissipated: Vec<f64> = run
        .e
        .snapshots
        .iter()
        .zip(&run.d.snapshots)
        .map(|(e, d)| norm(e, &e_one) + norm(d, &d_high))
        .collect();
    let diss_int = running_integral(times, &dissipated);
    let lhs: Vec<f64> = (0..times.len()).map(|i| pointwise[i] + mu * diss_int[i]).collect();
    let forcing_density: Vec<f64> = match forcing {
        None => vec![0.0; times.len()],
        Some(g) => times
            .iter()
            .map(|&t| {
                let (f, h) = g(t);
                norm(&f, &e_inf) + norm(&h, &d_low)
            })
            .collect(),
    };
    let forcing_int = running_integral(times, &forcing_density);
    let data = pointwise[0];
    let rhs0: Vec<f64> = (0..times.len()).map(|i| data + mu * forcing_int[i]).collect();
    let fitted = lhs
        .iter()
        .zip(&rhs0)
        .map(|(l, r)| if *l == 0.0 { 0.0 } else { l / r.max(1e-300) })
        .fold(0.0, f64::max);
    let last = times.len() - 1;
    let mut rhs_components = BTreeMap::new();
    rhs_components.insert("data".to_string(), fitted * data);
    rhs_components.insert("forcing".to_string(), fitted * mu * forcing_int[last]);
    let total: f64 = rhs_components.values().sum();
    let mut extras = BTreeMap::new();
    extras.insert("V_T".to_string(), 0.0);
    extras.insert("s".to_string(), s);
    extras.insert("mu".to_string(), mu);
    Ok(EstimateReport {
        name: "mixed".into(),
        lhs: lhs[last],
        ratio: if total > 0.0 { lhs[last] / total } else { 0.0 },
        rhs_components,
        fitted_c: fitted,
        c_max,
        pass: fitted <= c_max,
        extras,
        flags: BTreeMap::new(),
    })
}
