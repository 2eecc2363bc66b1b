//! Run-level harnesses: the small-data sweep, the bootstrap monitor and the
//! Friedrichs ladder.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::state::{SimState, SolverOptions};
use super::stepper::{simulate, SimOptions};
use crate::besov::{norm_from_blocks, running_integral, running_time_space_norm, NormSpec, TimeSeries};
use crate::error::{precondition, Result};
use crate::initial_data::{generate, DataSpec};
use crate::linear_models::{select_n0, stokes_heat_solve};
use crate::spectral_field::dyadic::low_pass_spectrum;
use crate::spectral_field::multipliers::derivative_spectrum;
use crate::spectral_field::{block_norms, BlockNorms, Grid, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub amplitudes: Vec<f64>,
    pub seeds: Vec<u64>,
    pub t_final: f64,
    pub dt: f64,
    pub mu: f64,
    pub band: (i32, i32),
    pub flow_steps: usize,
    pub cadence: usize,
}

impl SweepConfig {
    pub fn new(amplitudes: Vec<f64>, seeds: Vec<u64>, t_final: f64, dt: f64, mu: f64) -> Self {
        let base = DataSpec::new(0, 0.0);
        Self {
            amplitudes,
            seeds,
            t_final,
            dt,
            mu,
            band: base.band,
            flow_steps: base.flow_steps,
            cadence: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub seed: u64,
    /// Size of the data in the norm of the global functional.
    pub alpha: f64,
    pub max_y: f64,
    /// `max_t Y / alpha`, zero for zero data.
    pub ratio: f64,
    pub aborted: bool,
    pub abort_reason: String,
    pub steps: usize,
}

pub const SWEEP_CSV_HEADER: &str = "amplitude,seed,alpha,max_Y,ratio,aborted,steps";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}",
            r.amplitude, r.seed, r.alpha, r.max_y, r.ratio, r.aborted, r.steps
        );
    }
    out
}

/// Runs the solver for every `(seed, amplitude)` pair and records the growth
/// ratio of the global functional. Numerical failures are recorded as aborts.
pub fn small_data_sweep(grid: &Grid, cfg: &SweepConfig, opts: &SolverOptions) -> Result<Vec<SweepRow>> {
    if cfg.amplitudes.iter().any(|&a| !(a >= 0.0)) || cfg.amplitudes.windows(2).any(|w| w[0] >= w[1]) {
        return precondition("sweep amplitudes must be nonnegative and strictly ascending");
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        for &amplitude in &cfg.amplitudes {
            let spec = DataSpec {
                band: cfg.band,
                flow_steps: cfg.flow_steps,
                b_min: opts.b_min,
                ..DataSpec::new(seed, amplitude)
            };
            let data = generate(grid, &spec, cfg.mu)?;
            let alpha = data.certificate.norms.alpha;
            let state = SimState::new(data.a, data.u, data.e, cfg.mu)?;
            let sim = SimOptions {
                cadence: cfg.cadence,
                keep_states: false,
                ..SimOptions::new(cfg.t_final, cfg.dt)
            };
            let row = match simulate(&state, &sim, opts) {
                Ok(out) => {
                    let max_y = out.max_y();
                    SweepRow {
                        amplitude,
                        seed,
                        alpha,
                        max_y,
                        ratio: if alpha > 0.0 { max_y / alpha } else { 0.0 },
                        aborted: out.aborted.is_some(),
                        abort_reason: out.aborted.map(|a| a.reason).unwrap_or_default(),
                        steps: out.steps,
                    }
                }
                Err(e) => SweepRow {
                    amplitude,
                    seed,
                    alpha,
                    max_y: f64::NAN,
                    ratio: f64::NAN,
                    aborted: true,
                    abort_reason: e.to_string(),
                    steps: 0,
                },
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Free parameters of the bootstrap conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Factor of the fluctuation bound; `None` takes half the largest value with
    /// `exp(lambda / mu + lambda U~0 / mu_lower) < 2`.
    pub lambda: Option<f64>,
    /// Reference size of the fluctuation; `None` uses `8 (U0 + 1)` with
    /// `U0 = ||u0||_{B^{N/2-1}_{2,1}}`.
    pub u_tilde0: Option<f64>,
    /// Exponent in `A_T = 1 + b_lower 2^{N0 alpha} ||grad b||`.
    pub alpha: f64,
    pub kappa: f64,
    /// Low-frequency cut; `None` applies the smallest-admissible rule to `a0`.
    pub n0: Option<u32>,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            u_tilde0: None,
            alpha: 0.5,
            kappa: 1.0,
            n0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapRow {
    pub t: f64,
    /// `(lhs, rhs)` of each condition, evaluated on `[0, t]`.
    pub density: (f64, f64),
    pub smallness: (f64, f64),
    pub deformation: (f64, f64),
    pub fluctuation: (f64, f64),
}

impl BootstrapRow {
    pub fn holds(&self) -> [bool; 4] {
        [self.density, self.smallness, self.deformation, self.fluctuation].map(|(l, r)| l <= r)
    }
}

pub const BOOTSTRAP_CONDITIONS: [&str; 4] = ["density", "smallness", "deformation", "fluctuation"];

#[derive(Clone, Debug, Serialize)]
pub struct BootstrapReport {
    pub n0: u32,
    pub lambda: f64,
    pub u_tilde0: f64,
    pub rows: Vec<BootstrapRow>,
    /// First recorded time at which any condition fails, with its name.
    pub first_violation: Option<(f64, String)>,
    /// `min_t (rhs - lhs)` per condition.
    pub margins: [f64; 4],
}

pub const BOOTSTRAP_CSV_HEADER: &str = "t,density_lhs,density_rhs,smallness_lhs,smallness_rhs,deformation_lhs,deformation_rhs,fluctuation_lhs,fluctuation_rhs";

pub fn bootstrap_csv(report: &BootstrapReport) -> String {
    let mut out = String::from(BOOTSTRAP_CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = write!(out, "{:.16e}", r.t);
        for (l, h) in [r.density, r.smallness, r.deformation, r.fluctuation] {
            let _ = write!(out, ",{l:.16e},{h:.16e}");
        }
        out.push('\n');
    }
    out
}

fn blocks_of(s: &[Spectrum]) -> BlockNorms {
    block_norms(&s.iter().collect::<Vec<_>>())
}

/// Evaluates the four bootstrap conditions along a stored run: the density
/// and deformation stay within 2x and 6x of their data, the high part of the
/// density stays small, and the fluctuation `u - u_L` around the free Stokes
/// flow stays below `lambda U~0`. Time integrals use the stored snapshots.
pub fn bootstrap_monitor(states: &TimeSeries<SimState>, cfg: &BootstrapConfig) -> Result<BootstrapReport> {
    let Some(first) = states.snapshots.first() else {
        return precondition("bootstrap monitor needs at least one state");
    };
    let grid = first.grid();
    let dim = grid.dim();
    let h = dim as f64 / 2.0;
    let mu = first.mu;
    let nh = |s: f64| NormSpec::nonhomogeneous(s, 1.0);
    let times = &states.times;

    let b_lower = states.snapshots.iter().map(|s| 1.0 + s.a.min()).fold(f64::INFINITY, f64::min);
    let mu_lower = mu * b_lower;
    let n0 = cfg.n0.unwrap_or_else(|| select_n0(&first.a, 1.0 + first.a.min()));

    let a_blocks: Vec<BlockNorms> = states.snapshots.iter().map(|s| blocks_of(&[s.a.spectrum()])).collect();
    let e_blocks: Vec<BlockNorms> = states.snapshots.iter().map(|s| blocks_of(&s.e.spectra())).collect();
    let high_blocks: Vec<BlockNorms> = states
        .snapshots
        .iter()
        .map(|s| {
            let a = s.a.spectrum();
            blocks_of(&[&a - &low_pass_spectrum(&a, n0 as i32)])
        })
        .collect();
    let sup = |b: &[BlockNorms], s: f64| running_time_space_norm(times, b, &nh(s).with_rho(f64::INFINITY));
    let a_sup = sup(&a_blocks, h)?;
    let e_sup = sup(&e_blocks, h)?;
    let high_sup = sup(&high_blocks, h)?;
    let grad_b: Vec<f64> = states
        .snapshots
        .iter()
        .map(|s| {
            let a = s.a.spectrum();
            let g: Vec<Spectrum> = (0..dim).map(|j| derivative_spectrum(&a, j)).collect();
            norm_from_blocks(&blocks_of(&g), &nh(h - 1.0))
        })
        .collect();

    let linear = stokes_heat_solve(&first.u, mu, times)?;
    let bar_blocks: Vec<BlockNorms> = states
        .snapshots
        .iter()
        .zip(&linear.u.snapshots)
        .map(|(s, l)| blocks_of(&s.u.sub(l).spectra()))
        .collect();
    let p_norm: Vec<f64> = states
        .snapshots
        .iter()
        .map(|s| {
            let p = s.pi.spectrum();
            let g: Vec<Spectrum> = (0..dim).map(|j| derivative_spectrum(&p, j)).collect();
            norm_from_blocks(&blocks_of(&g), &nh(h - 1.0))
        })
        .collect();
    let bar_sup = sup(&bar_blocks, h - 1.0)?;
    let bar_high: Vec<f64> = bar_blocks.iter().map(|b| norm_from_blocks(b, &nh(h + 1.0))).collect();
    let bar_int = running_integral(times, &bar_high);
    let p_int = running_integral(times, &p_norm);

    let a0 = norm_from_blocks(&a_blocks[0], &nh(h));
    let e0 = norm_from_blocks(&e_blocks[0], &nh(h));
    let u_tilde0 = cfg
        .u_tilde0
        .unwrap_or_else(|| 8.0 * (norm_from_blocks(&blocks_of(&first.u.spectra()), &nh(h - 1.0)) + 1.0));
    let lambda = cfg
        .lambda
        .unwrap_or_else(|| 0.5 * std::f64::consts::LN_2 / (1.0 / mu + u_tilde0 / mu_lower));
    let small_rhs = (0.25 * b_lower).min(mu_lower / (4.0 * mu));

    let mut rows = Vec::with_capacity(times.len());
    let mut grad_b_sup = 0.0_f64;
    let mut first_violation = None;
    let mut margins = [f64::INFINITY; 4];
    for (i, &t) in times.iter().enumerate() {
        grad_b_sup = grad_b_sup.max(grad_b[i]);
        let a_t = 1.0 + b_lower * 2f64.powf(n0 as f64 * cfg.alpha) * grad_b_sup;
        let row = BootstrapRow {
            t,
            density: (a_sup[i], 2.0 * a0),
            smallness: (a_t.powf(cfg.kappa + 1.0) * high_sup[i], small_rhs),
            deformation: (e_sup[i], 6.0 * e0),
            fluctuation: (bar_sup[i] + mu_lower * bar_int[i] + p_int[i], lambda * u_tilde0),
        };
        let pairs = [row.density, row.smallness, row.deformation, row.fluctuation];
        for (m, (l, r)) in margins.iter_mut().zip(pairs) {
            *m = m.min(r - l);
        }
        if first_violation.is_none() {
            if let Some(k) = row.holds().iter().position(|ok| !ok) {
                first_violation = Some((t, BOOTSTRAP_CONDITIONS[k].to_string()));
            }
        }
        rows.push(row);
    }
    Ok(BootstrapReport {
        n0,
        lambda,
        u_tilde0,
        rows,
        first_violation,
        margins,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderRow {
    pub n_cut: f64,
    pub next_n_cut: f64,
    /// `L^2` distance between the terminal states of consecutive truncations.
    pub cauchy_difference: f64,
    pub relative: f64,
}

pub const LADDER_CSV_HEADER: &str = "n_cut,next_n_cut,cauchy_difference,relative";

pub fn ladder_csv(rows: &[LadderRow]) -> String {
    let mut out = String::from(LADDER_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            r.n_cut, r.next_n_cut, r.cauchy_difference, r.relative
        );
    }
    out
}

fn state_distance(x: &SimState, y: &SimState) -> f64 {
    ((&x.a - &y.a).l2_norm().powi(2) + x.u.sub(&y.u).l2_norm().powi(2) + x.e.sub(&y.e).l2_norm().powi(2)).sqrt()
}

fn state_size(x: &SimState) -> f64 {
    (x.a.l2_norm().powi(2) + x.u.l2_norm().powi(2) + x.e.l2_norm().powi(2)).sqrt()
}

/// Solves the truncated systems for each Friedrichs radius (ascending) from the
/// projected data and reports the distance between consecutive terminal states.
pub fn friedrichs_ladder(
    initial: &SimState,
    n_cuts: &[f64],
    sim: &SimOptions,
    opts: &SolverOptions,
) -> Result<Vec<LadderRow>> {
    if n_cuts.len() < 2 || n_cuts.windows(2).any(|w| !(w[0] < w[1])) || !(n_cuts[0] > 0.0) {
        return precondition("ladder needs at least two positive, strictly ascending radii");
    }
    let sim = SimOptions {
        keep_states: false,
        cadence: usize::MAX,
        ..*sim
    };
    let mut finals = Vec::with_capacity(n_cuts.len());
    for &n in n_cuts {
        let state = initial.clone().with_n_cut(n).projected();
        finals.push(simulate(&state, &sim, opts)?.final_state);
    }
    Ok(finals
        .windows(2)
        .zip(n_cuts.windows(2))
        .map(|(f, n)| {
            let d = state_distance(&f[0], &f[1]);
            let s = state_size(&f[1]);
            LadderRow {
                n_cut: n[0],
                next_n_cut: n[1],
                cauchy_difference: d,
                relative: if s > 0.0 { d / s } else { d },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_has_zero_ratio() {
        let g = Grid::new(2, 16).unwrap();
        let cfg = SweepConfig::new(vec![0.0], vec![1], 0.1, 0.05, 1.0);
        let rows = small_data_sweep(&g, &cfg, &SolverOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].ratio, 0.0);
        assert!(!rows[0].aborted);
        assert!(sweep_csv(&rows).starts_with(SWEEP_CSV_HEADER));
    }

    #[test]
    fn rejects_unsorted_amplitudes() {
        let g = Grid::new(2, 16).unwrap();
        let cfg = SweepConfig::new(vec![0.2, 0.1], vec![1], 0.1, 0.05, 1.0);
        assert!(small_data_sweep(&g, &cfg, &SolverOptions::default()).is_err());
    }

    #[test]
    fn bootstrap_holds_trivially_at_rest() {
        let g = Grid::new(2, 16).unwrap();
        let out = simulate(&SimState::rest(&g, 1.0), &SimOptions::new(0.2, 0.05), &SolverOptions::default()).unwrap();
        let r = bootstrap_monitor(&out.states, &BootstrapConfig::default()).unwrap();
        assert!(r.first_violation.is_none());
        assert!(r.rows.iter().all(|row| row.holds().iter().all(|&b| b)));
    }

    #[test]
    fn ladder_differences_shrink() {
        let g = Grid::new(2, 32).unwrap();
        let data = generate(&g, &DataSpec::new(2, 0.05), 1.0).unwrap();
        let s = SimState::new(data.a, data.u, data.e, 1.0).unwrap();
        let rows = friedrichs_ladder(&s, &[2.0, 4.0, 8.0], &SimOptions::new(0.2, 0.02), &SolverOptions::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].cauchy_difference < rows[0].cauchy_difference);
    }
}
