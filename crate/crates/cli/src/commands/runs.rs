use serde_json::json;
use visco_core::initial_data::{generate, write_initial_data, DataSpec};
use visco_core::spectral_field::io::{read_fields, write_fields};
use visco_core::spectral_field::{Field, Grid, TensorField, VectorField};
use visco_core::viscoelastic::{
    bootstrap_csv, bootstrap_monitor, d_reformulation, data_size, diagnostics_csv, friedrichs_ladder,
    ladder_csv, simulate as run_simulation, small_data_sweep, sweep_csv, BootstrapConfig, SimOptions, SimState,
    SolverOptions, SweepConfig, BOOTSTRAP_CONDITIONS,
};

use super::{spread, verdict, Output};
use crate::config::RunConfig;
use crate::svg::{LineChart, Series};
use crate::{CliError, Outcome};

fn data_spec(seed: u64, amplitude: f64, band: [i32; 2], flow_steps: usize, b_min: f64) -> DataSpec {
    DataSpec {
        band: (band[0], band[1]),
        flow_steps,
        b_min,
        ..DataSpec::new(seed, amplitude)
    }
}

fn load_state(dir: &std::path::Path, cfg: &RunConfig) -> Result<SimState, CliError> {
    let read = |name: &str| -> Result<(Grid, Vec<Field>), CliError> {
        read_fields(&dir.join(name)).map_err(|e| CliError::Config(format!("simulate.data_dir: {name}: {e}")))
    };
    let (grid, mut a) = read("a0.bin")?;
    let (_, u) = read("u0.bin")?;
    let (_, e) = read("E0.bin")?;
    if grid.dim() != cfg.dim || grid.n() != cfg.grid {
        return Err(CliError::Config(format!(
            "simulate.data_dir: data is {}D on {} points, config asks for {}D on {}",
            grid.dim(),
            grid.n(),
            cfg.dim,
            cfg.grid
        )));
    }
    if a.len() != 1 || u.len() != cfg.dim || e.len() != cfg.dim * cfg.dim {
        return Err(CliError::Config("simulate.data_dir: unexpected component counts".into()));
    }
    Ok(SimState::new(a.remove(0), VectorField::new(u)?, TensorField::new(e)?, cfg.mu)?)
}

fn write_state(out: &Output, name: &str, s: &SimState) -> Result<(), CliError> {
    let dim = s.u.dim();
    let mut fields: Vec<&Field> = vec![&s.a];
    fields.extend(s.u.components());
    fields.extend(s.e.components());
    let mut labels = vec!["a".to_string()];
    labels.extend((0..dim).map(|i| format!("u{i}")));
    labels.extend((0..dim * dim).map(|ij| format!("E{}{}", ij / dim, ij % dim)));
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    write_fields(&out.path(name), &fields, &labels)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.simulate;
    let mut initial = match &c.data_dir {
        Some(dir) => load_state(dir, cfg)?,
        None => {
            let spec = data_spec(cfg.seed, c.amplitude, c.band, c.flow_steps, c.b_min);
            let data = generate(&grid, &spec, cfg.mu)?;
            SimState::new(data.a, data.u, data.e, cfg.mu)?
        }
    };
    if let Some(n) = c.n_cut {
        initial = initial.with_n_cut(n);
    }
    let opts = SolverOptions {
        b_min: c.b_min,
        det_abort: c.det_abort,
        ..SolverOptions::default()
    };
    let sim = SimOptions {
        cadence: c.cadence,
        ..SimOptions::new(c.t_final, c.dt)
    };
    let alpha = data_size(&initial.a, &initial.u, &initial.e, cfg.mu);
    let run = run_simulation(&initial, &sim, &opts)?;
    let out = Output::create(cfg)?;
    out.write("diagnostics.csv", &diagnostics_csv(&run.diagnostics))?;

    if c.checkpoint_every > 0 {
        for (i, s) in run.states.snapshots.iter().enumerate().step_by(c.checkpoint_every) {
            write_state(&out, &format!("checkpoint_{i:05}.bin"), s)?;
        }
    }
    write_state(&out, "final_state.bin", &run.final_state)?;

    let d = d_reformulation(&run.final_state, &opts)?;
    let last = run.diagnostics.last().cloned().unwrap_or_default();
    let constraint = last.det_residual.max(last.div_et_residual).max(last.compat_residual);
    let d_worst = [d.residuals.lambda_identity, d.residuals.recovery, d.residuals.e_equation, d.residuals.d_equation]
        .into_iter()
        .fold(0.0, f64::max);

    let mut failures = Vec::new();
    if !(run.max_div_u <= c.div_tol) {
        failures.push(format!("div_u: {:.3e} above {:.1e}", run.max_div_u, c.div_tol));
    }
    if !(constraint <= c.constraint_tol) {
        failures.push(format!("constraints: {constraint:.3e} above {:.1e}", c.constraint_tol));
    }
    if !(d_worst <= c.d_tol) {
        failures.push(format!("d_reformulation: {d_worst:.3e} above {:.1e}", c.d_tol));
    }

    let bootstrap = if c.bootstrap && !run.states.snapshots.is_empty() {
        let bc = BootstrapConfig {
            lambda: c.lambda,
            u_tilde0: c.u_tilde0,
            ..BootstrapConfig::default()
        };
        let report = bootstrap_monitor(&run.states, &bc)?;
        out.write("bootstrap.csv", &bootstrap_csv(&report))?;
        let mut chart = LineChart::new("Bootstrap conditions", "t", "lhs / rhs").log_y();
        for (k, name) in BOOTSTRAP_CONDITIONS.iter().enumerate() {
            let points = report
                .rows
                .iter()
                .map(|r| {
                    let (l, rhs) = [r.density, r.smallness, r.deformation, r.fluctuation][k];
                    (r.t, l / rhs)
                })
                .collect();
            chart = chart.with(Series::new(*name, points));
        }
        out.chart("bootstrap.svg", &chart)?;
        Some(report)
    } else {
        None
    };

    let ladder = if c.ladder.is_empty() {
        None
    } else {
        let rows = friedrichs_ladder(&initial, &c.ladder, &sim, &opts)?;
        out.write("ladder.csv", &ladder_csv(&rows))?;
        out.chart(
            "ladder.svg",
            &LineChart::new("Friedrichs ladder", "n_cut", "Cauchy difference")
                .log_y()
                .with(Series::new("difference", rows.iter().map(|r| (r.n_cut, r.cauchy_difference)).collect())),
        )?;
        Some(rows)
    };

    let rows = &run.diagnostics;
    out.chart(
        "constraints.svg",
        &LineChart::new("Constraint residuals", "t", "residual")
            .log_y()
            .with(Series::new("div u", rows.iter().map(|r| (r.t, r.div_u_residual)).collect()))
            .with(Series::new("det", rows.iter().map(|r| (r.t, r.det_residual)).collect()))
            .with(Series::new("div E^T", rows.iter().map(|r| (r.t, r.div_et_residual)).collect()))
            .with(Series::new("compat", rows.iter().map(|r| (r.t, r.compat_residual)).collect())),
    )?;
    out.chart(
        "y_norm.svg",
        &LineChart::new("Global functional", "t", "Y").with(Series::new(
            "Y",
            rows.iter().map(|r| (r.t, r.y_norm)).collect(),
        )),
    )?;

    let outcome = match &run.aborted {
        Some(a) => Outcome::Abort(format!("t = {}: {}", a.t, a.reason)),
        None => verdict(failures),
    };
    out.report(
        "simulate",
        cfg,
        c,
        &outcome,
        json!({
            "alpha": alpha,
            "steps": run.steps,
            "final_time": run.final_state.t,
            "aborted": run.aborted,
            "max_div_u": run.max_div_u,
            "max_pressure_iterations": run.max_pressure_iterations,
            "max_y": run.max_y(),
            "final_diagnostics": last,
            "d_residuals": d.residuals,
            "bootstrap": bootstrap.map(|b| json!({
                "n0": b.n0,
                "lambda": b.lambda,
                "u_tilde0": b.u_tilde0,
                "first_violation": b.first_violation,
                "margins": b.margins,
            })),
            "ladder": ladder,
        }),
    )?;
    Ok(outcome)
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.sweep;
    let seeds: Vec<u64> = (0..c.seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let sc = SweepConfig {
        band: (c.band[0], c.band[1]),
        flow_steps: c.flow_steps,
        cadence: c.cadence,
        ..SweepConfig::new(c.amplitudes.clone(), seeds.clone(), c.t_final, c.dt, cfg.mu)
    };
    let rows = small_data_sweep(&grid, &sc, &SolverOptions::default())?;
    let out = Output::create(cfg)?;
    out.write("sweep.csv", &sweep_csv(&rows))?;
    let mut chart = LineChart::new("max Y / alpha over the amplitude ladder", "log10 amplitude", "ratio");
    for &seed in &seeds {
        chart = chart.with(Series::new(
            format!("seed {seed}"),
            rows.iter()
                .filter(|r| r.seed == seed && r.amplitude > 0.0)
                .map(|r| (r.amplitude.log10(), r.ratio))
                .collect(),
        ));
    }
    out.chart("sweep.svg", &chart)?;

    let mut failures: Vec<String> = rows
        .iter()
        .filter(|r| r.aborted)
        .map(|r| format!("abort at amplitude {} seed {}: {}", r.amplitude, r.seed, r.abort_reason))
        .collect();
    let ratios: Vec<f64> = rows.iter().filter(|r| !r.aborted && r.amplitude > 0.0).map(|r| r.ratio).collect();
    let variation = spread(&ratios);
    if !(variation <= c.max_variation) {
        failures.push(format!("variation {variation:.3} above {}", c.max_variation));
    }
    let m_emp = ratios.iter().copied().fold(0.0, f64::max);
    let outcome = verdict(failures);
    out.report(
        "sweep",
        cfg,
        c,
        &outcome,
        json!({ "m_emp": m_emp, "variation": variation, "rows": rows }),
    )?;
    Ok(outcome)
}

pub fn gen_data(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.gen_data;
    let spec = DataSpec {
        flow_time: c.flow_time,
        ..data_spec(cfg.seed, c.amplitude, c.band, c.flow_steps, c.b_min)
    };
    let data = generate(&grid, &spec, cfg.mu)?;
    let out = Output::create(cfg)?;
    write_initial_data(out.dir(), &data)?;
    out.report("gen-data", cfg, c, &Outcome::Pass, json!({ "certificate": data.certificate }))?;
    Ok(Outcome::Pass)
}
