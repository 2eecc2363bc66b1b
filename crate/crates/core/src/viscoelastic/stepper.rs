//! Time stepping: Lawson RK4 with the constant viscosity `mu Lap u` integrated exactly.

use serde::Serialize;

use super::invariants::{diagnostics_row, DiagnosticsRow, StateBlocks, YMonitor};
use super::rhs::{evaluate, masked, pressure_from_gradient, Tendency};
use super::state::{FriedrichsMask, SimState, SolverOptions};
use crate::besov::TimeSeries;
use crate::error::{Error, Result};
use crate::linear_models::stepping::{Lawson, State};
use crate::linear_models::transport::courant;
use crate::spectral_field::multipliers::{laplacian_spectrum, leray_spectra};
use crate::spectral_field::Spectrum;

struct Core {
    mu: f64,
    dim: usize,
    mask: FriedrichsMask,
    opts: SolverOptions,
    warm: Option<Vec<Spectrum>>,
    max_pressure_iterations: usize,
}

/// Reusable stepper for one grid, viscosity and Friedrichs radius.
pub struct Stepper {
    lawson: Lawson,
    core: Core,
}

impl Stepper {
    pub fn new(state: &SimState, opts: SolverOptions) -> Self {
        let grid = state.grid();
        let dim = grid.dim();
        let rate: Vec<f64> = grid.modes().xi_norm.iter().map(|x| -state.mu * x * x).collect();
        let mut rates = vec![None];
        rates.extend((0..dim).map(|_| Some(rate.clone())));
        rates.extend((0..dim * dim).map(|_| None));
        Self {
            lawson: Lawson { rates },
            core: Core {
                mu: state.mu,
                dim,
                mask: FriedrichsMask::new(grid, state.n_cut),
                opts,
                warm: None,
                max_pressure_iterations: 0,
            },
        }
    }

    pub fn max_pressure_iterations(&self) -> usize {
        self.core.max_pressure_iterations
    }

    /// Advances `state` by `dt`; `u` is Leray-projected and the pressure re-solved at the end.
    pub fn step(&mut self, state: &SimState, dt: f64) -> Result<SimState> {
        if dt == 0.0 {
            return Ok(state.clone());
        }
        let core = &mut self.core;
        let number = courant(&state.u, dt);
        if number > core.opts.cfl_cap {
            return Err(Error::Cfl {
                number,
                cap: core.opts.cfl_cap,
            });
        }
        let s0 = masked(state.to_spectra(), &core.mask);
        let mut s1 = self.lawson.step(&s0, state.t, dt, |_, y| core.explicit(y))?;
        let p = leray_spectra(&s1[1..1 + core.dim]);
        for (i, c) in p.into_iter().enumerate() {
            s1[1 + i] = c;
        }
        let s1 = masked(s1, &core.mask);
        if s1.iter().any(|s| s.coefs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite())) {
            return Err(Error::StepRejected {
                t: state.t,
                reason: "non-finite state".into(),
            });
        }
        let end = core.tendency(&s1)?;
        let pi = pressure_from_gradient(&end.grad_pi);
        let next = SimState::from_spectra(state, state.t + dt, &s1, pi);
        let floor = next.a.min() + 1.0;
        if floor < core.opts.b_min {
            return Err(Error::StepRejected {
                t: next.t,
                reason: format!("inf(1 + a) = {floor:.6} below {}", core.opts.b_min),
            });
        }
        Ok(next)
    }
}

impl Core {
    fn tendency(&mut self, s: &[Spectrum]) -> Result<Tendency> {
        let t = evaluate(s, self.mu, &self.mask, &self.opts, self.warm.as_deref())?;
        self.max_pressure_iterations = self.max_pressure_iterations.max(t.pressure_iterations);
        self.warm = Some(t.grad_pi.clone());
        Ok(t)
    }

    /// Explicit part: full rate minus the exactly integrated `mu Lap u`.
    fn explicit(&mut self, s: &[Spectrum]) -> Result<State> {
        let mut r = self.tendency(s)?.rates;
        for i in 0..self.dim {
            r[1 + i].axpy(-self.mu, &laplacian_spectrum(&s[1 + i]));
        }
        Ok(r)
    }
}

/// One step from `state` with default solver options.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    Stepper::new(state, SolverOptions::default()).step(state, dt)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SimOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Diagnostics (and stored states) every `cadence` steps.
    pub cadence: usize,
    pub keep_states: bool,
}

impl SimOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self {
            t_final,
            dt,
            cadence: 1,
            keep_states: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AbortInfo {
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct SimOutput {
    pub states: TimeSeries<SimState>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub final_state: SimState,
    pub aborted: Option<AbortInfo>,
    pub steps: usize,
    /// Largest `div u` residual after any accepted step.
    pub max_div_u: f64,
    pub max_pressure_iterations: usize,
}

impl SimOutput {
    pub fn max_y(&self) -> f64 {
        self.diagnostics.iter().map(|r| r.y_norm).fold(0.0, f64::max)
    }
}

/// Integrates to `t_final`, recording diagnostics every `cadence` steps and at the end.
/// A determinant defect above the abort threshold stops the run with a marker;
/// other numerical failures are returned as errors.
pub fn simulate(initial: &SimState, sim: &SimOptions, opts: &SolverOptions) -> Result<SimOutput> {
    if !(sim.t_final >= 0.0) || !(sim.dt > 0.0) || sim.cadence == 0 {
        return Err(Error::Precondition("simulate needs T >= 0, dt > 0 and cadence >= 1".into()));
    }
    let state0 = initial.projected();
    state0.check(opts.b_min)?;
    let steps = if sim.t_final == 0.0 {
        0
    } else {
        ((sim.t_final / sim.dt) - 1e-9).ceil().max(1.0) as usize
    };
    let h = if steps == 0 { 0.0 } else { sim.t_final / steps as f64 };
    let mut stepper = Stepper::new(&state0, *opts);
    let dim = state0.grid().dim();
    let mut monitor = YMonitor::new(dim, state0.mu);
    let mut states = TimeSeries::empty();
    let mut diagnostics = Vec::new();
    let blocks_of = |s: &SimState| StateBlocks::of(&s.a.spectrum(), &s.u.spectra(), &s.e.spectra());
    let mut state = {
        // Pressure of the initial state.
        let mask = FriedrichsMask::new(state0.grid(), state0.n_cut);
        let t = evaluate(&masked(state0.to_spectra(), &mask), state0.mu, &mask, opts, None)?;
        SimState {
            pi: pressure_from_gradient(&t.grad_pi),
            ..state0
        }
    };
    let b0 = blocks_of(&state);
    monitor.update(state.t, &b0);
    let row0 = diagnostics_row(&state, &b0, &monitor);
    let mut aborted = None;
    let mut max_div_u = row0.div_u_residual;
    if row0.det_residual > opts.det_abort {
        aborted = Some(AbortInfo {
            t: 0.0,
            reason: format!("det residual {:.3e} above {:.3e}", row0.det_residual, opts.det_abort),
        });
    }
    diagnostics.push(row0);
    if sim.keep_states {
        states.push(state.t, state.clone());
    }
    let mut done = 0;
    if aborted.is_none() {
        for n in 0..steps {
            let mut next = stepper.step(&state, h)?;
            next.t = (n + 1) as f64 * h;
            let blocks = blocks_of(&next);
            monitor.update(next.t, &blocks);
            done = n + 1;
            let record = (n + 1) % sim.cadence == 0 || n + 1 == steps;
            let row = diagnostics_row(&next, &blocks, &monitor);
            max_div_u = max_div_u.max(row.div_u_residual);
            let abort = row.det_residual > opts.det_abort;
            if record || abort {
                diagnostics.push(row.clone());
                if sim.keep_states {
                    states.push(next.t, next.clone());
                }
            }
            state = next;
            if abort {
                aborted = Some(AbortInfo {
                    t: state.t,
                    reason: format!("det residual {:.3e} above {:.3e}", row.det_residual, opts.det_abort),
                });
                break;
            }
        }
    }
    Ok(SimOutput {
        states,
        diagnostics,
        final_state: state,
        aborted,
        steps: done,
        max_div_u,
        max_pressure_iterations: stepper.max_pressure_iterations(),
    })
}
