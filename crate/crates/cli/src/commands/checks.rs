use std::fmt::Write as _;

use serde_json::json;
use visco_core::bony::{bony_reconstruct, Ensemble};
use visco_core::linear_models::mixed::decay_csv;
use visco_core::linear_models::{mixed_decay_spectrum, mode_eigenvalues};
use visco_core::spectral_field::dyadic::{chi_q, phi_q};
use visco_core::spectral_field::lp_check as run_lp_check;

use super::{verdict, Output};
use crate::config::RunConfig;
use crate::svg::{LineChart, Series};
use crate::{CliError, Outcome};

pub fn lp_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.lp_check;
    let report = run_lp_check(&grid, c.ensemble, cfg.seed, c.cutoff_scale);
    let out = Output::create(cfg)?;
    let mut csv = String::from("check,value,pass\n");
    let _ = writeln!(csv, "partition_max_error,{:.16e},{}", report.partition_max_error, report.partition_ok);
    let _ = writeln!(
        csv,
        "quasi_orthogonality_max,{:.16e},{}",
        report.quasi_orthogonality_max, report.quasi_orthogonality_ok
    );
    let _ = writeln!(csv, "bernstein_min,{:.16e},{}", report.bernstein_min, report.bernstein_ok);
    let _ = writeln!(csv, "bernstein_max,{:.16e},{}", report.bernstein_max, report.bernstein_ok);
    out.write("lp_check.csv", &csv)?;

    let r_max = grid.max_radius();
    let samples: Vec<f64> = (0..=400).map(|i| r_max * i as f64 / 400.0).collect();
    let mut chart = LineChart::new("Dyadic profiles", "|k|", "weight").with(Series::new(
        "low",
        samples.iter().map(|&r| (r, chi_q(r, grid.q_min()))).collect(),
    ));
    for q in grid.q_min()..=grid.q_max() {
        chart = chart.with(Series::new(
            format!("q={q}"),
            samples.iter().map(|&r| (r, c.cutoff_scale * phi_q(r, q))).collect(),
        ));
    }
    out.chart("lp_profiles.svg", &chart)?;

    let outcome = verdict(report.failures().into_iter().map(String::from).collect());
    out.report("lp-check", cfg, c, &outcome, json!(report))?;
    Ok(outcome)
}

pub fn bony_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.bony_check;
    let ensemble = Ensemble::new(&grid, cfg.seed, c.pairs);
    let mut csv = String::from("member,seed,residual,relative\n");
    let mut worst = 0.0_f64;
    let mut points = Vec::with_capacity(c.pairs);
    for i in 0..c.pairs {
        let (f, g) = ensemble.pair(i);
        let r = bony_reconstruct(&f, &g)?;
        worst = worst.max(r.residual);
        points.push((i as f64, r.residual));
        let _ = writeln!(csv, "{i},{},{:.16e},{}", ensemble.member_seed(i), r.residual, r.relative);
    }
    let out = Output::create(cfg)?;
    out.write("bony_check.csv", &csv)?;
    out.chart(
        "bony_check.svg",
        &LineChart::new("Bony reconstruction residual", "member", "relative residual")
            .log_y()
            .with(Series::new("residual", points)),
    )?;
    let outcome = verdict(if worst <= c.tolerance {
        Vec::new()
    } else {
        vec!["bony_reconstruction".into()]
    });
    out.report(
        "bony-check",
        cfg,
        c,
        &outcome,
        json!({ "max_residual": worst, "pairs": c.pairs }),
    )?;
    Ok(outcome)
}

pub fn linear_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let c = &cfg.linear_spectrum;
    let mu = cfg.mu;
    let xis: Vec<f64> = (0..c.points)
        .map(|i| c.xi_max * i as f64 / (c.points - 1) as f64)
        .collect();
    let rows = mixed_decay_spectrum(mu, &xis);
    let boundary = 2.0 / mu;

    // Trace and determinant of the mode matrix: -mu xi^2 and xi^2.
    let mut identity_error = 0.0_f64;
    for &x in &xis {
        let [a, b] = mode_eigenvalues(mu, x);
        let scale = (mu * x * x).max(x * x).max(1e-300);
        identity_error = identity_error.max(((a + b).re + mu * x * x).abs() / scale);
        identity_error = identity_error.max((a * b - x * x).norm() / (x * x).max(1e-300));
    }
    // First sample with a nonnegative discriminant mu^2 xi^4 - 4 xi^2.
    let disc = |x: f64| mu * mu * x.powi(4) - 4.0 * x * x;
    let flip = xis.windows(2).find(|w| w[0] > 0.0 && disc(w[0]) < 0.0 && disc(w[1]) >= 0.0);
    let bracket = flip.map(|w| [w[0], w[1]]);
    let boundary_ok = match bracket {
        Some([lo, hi]) => lo < boundary && boundary <= hi,
        None => c.xi_max < boundary,
    };
    let far = 100.0 / mu;
    let slow = mode_eigenvalues(mu, far)[0].re;
    let slow_error = (slow + 1.0 / mu).abs() * mu;
    let mut failures = Vec::new();
    if identity_error > 1e-12 {
        failures.push("trace_determinant".to_string());
    }
    if !boundary_ok {
        failures.push("regime_boundary".to_string());
    }
    if slow_error > c.slow_rate_tolerance {
        failures.push("slow_rate".to_string());
    }

    let out = Output::create(cfg)?;
    out.write("decay_spectrum.csv", &decay_csv(&rows))?;
    out.chart(
        "decay_spectrum.svg",
        &LineChart::new("Mixed-system decay rates", "|xi|", "Re lambda")
            .with(Series::new("slow", rows.iter().map(|r| (r.xi, r.lambda_slow[0])).collect()))
            .with(Series::new("fast", rows.iter().map(|r| (r.xi, r.lambda_fast[0])).collect())),
    )?;
    let outcome = verdict(failures);
    out.report(
        "linear-spectrum",
        cfg,
        c,
        &outcome,
        json!({
            "boundary": boundary,
            "sign_change_bracket": bracket,
            "trace_determinant_error": identity_error,
            "slow_rate_at_100_over_mu": slow,
            "slow_rate_relative_error": slow_error,
        }),
    )?;
    Ok(outcome)
}
