use std::fmt::Write as _;

use serde_json::{json, Value};
use visco_core::bony::{product_estimate_harness, Ensemble, EstimateId};
use visco_core::linear_models::{
    mixed_scenario, momentum_scenario, transport_scenario, EstimateCheckConfig, EstimateReport,
};
use visco_core::spectral_field::Grid;

use super::{spread, verdict, Output};
use crate::config::{EstimatesConfig, RunConfig};
use crate::svg::{LineChart, Series};
use crate::{CliError, Outcome, Which};

pub fn estimates(cfg: &RunConfig, which: Which) -> Result<Outcome, CliError> {
    match which {
        Which::Product => products(cfg),
        _ => linear(cfg, which),
    }
}

fn products(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let c = &cfg.estimates;
    let ids: Vec<EstimateId> = if c.products.is_empty() {
        EstimateId::ALL.to_vec()
    } else {
        c.products.iter().map(|p| p.parse()).collect::<Result<_, _>>()?
    };
    let mut csv = String::from("estimate_id,ensemble,seed,lhs,rhs,ratio\n");
    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    let mut chart = LineChart::new("Product estimate ratios", "member (sorted)", "lhs / rhs").log_y();
    for id in ids {
        let mut params = id.default_params(cfg.dim);
        params.mu = cfg.mu;
        let mut maxima = Vec::with_capacity(c.ensembles);
        let mut all_pass = true;
        let mut sorted = Vec::new();
        for e in 0..c.ensembles {
            let ensemble = Ensemble::new(&grid, cfg.seed.wrapping_add(e as u64), c.members);
            let report = product_estimate_harness(id, &params, &ensemble, c.c_max)?;
            for s in &report.samples {
                let _ = writeln!(csv, "{id},{e},{},{:.16e},{:.16e},{:.16e}", s.seed, s.lhs, s.rhs, s.ratio);
            }
            all_pass &= report.pass;
            maxima.push(report.max_ratio);
            sorted.extend(report.ratios());
        }
        sorted.sort_by(f64::total_cmp);
        chart = chart.with(Series::new(
            id.as_str(),
            sorted.iter().enumerate().map(|(i, &r)| (i as f64, r)).collect(),
        ));
        let sp = spread(&maxima);
        if !all_pass {
            failures.push(format!("{id}: ratio above c_max"));
        }
        if !(sp < c.max_spread) {
            failures.push(format!("{id}: spread {sp:.3} across ensembles"));
        }
        summaries.push(json!({
            "estimate_id": id,
            "parameters": params,
            "ensemble_max_ratios": maxima,
            "max_ratio": maxima.iter().copied().fold(0.0, f64::max),
            "spread": sp,
        }));
    }
    let out = Output::create(cfg)?;
    out.write("product_estimates.csv", &csv)?;
    out.chart("product_estimates.svg", &chart)?;
    let outcome = verdict(failures);
    out.report("estimates", cfg, c, &outcome, json!({ "which": "product", "estimates": summaries }))?;
    Ok(outcome)
}

fn run_one(grid: &Grid, cfg: &RunConfig, which: Which, seed: u64, constant: bool) -> Result<EstimateReport, CliError> {
    let c = &cfg.estimates;
    let sc = c.scenario(cfg.mu, constant);
    Ok(match which {
        Which::Transport => transport_scenario(grid, seed, &sc, c.transport_s, c.transport_r)?,
        Which::Momentum => {
            let check = EstimateCheckConfig::new(c.momentum_s, c.momentum_r, c.momentum_alpha, c.c_max);
            momentum_scenario(grid, seed, &sc, &check)?
        }
        Which::Mixed => mixed_scenario(grid, seed, &sc, c.mixed_s)?,
        Which::Product => unreachable!("product estimates run separately"),
    })
}

fn name_of(which: Which) -> &'static str {
    match which {
        Which::Transport => "transport",
        Which::Momentum => "momentum",
        Which::Mixed => "mixed",
        Which::Product => "product",
    }
}

/// Fitted constants of one linear check over the seeds, with and without the
/// variable coefficients.
pub fn linear_check(grid: &Grid, cfg: &RunConfig, which: Which) -> Result<(Vec<(u64, bool, EstimateReport)>, Vec<String>), CliError> {
    let c: &EstimatesConfig = &cfg.estimates;
    let mut runs = Vec::new();
    for i in 0..c.seeds {
        let seed = cfg.seed.wrapping_add(i as u64);
        for constant in [false, true] {
            runs.push((seed, constant, run_one(grid, cfg, which, seed, constant)?));
        }
    }
    let mut failures = Vec::new();
    let variable: Vec<f64> = runs.iter().filter(|r| !r.1).map(|r| r.2.fitted_c).collect();
    if variable.iter().any(|c| !c.is_finite()) {
        failures.push("fitted constant not finite".to_string());
    } else if variable.iter().any(|&x| x > c.c_max) {
        failures.push(format!("fitted constant above c_max = {}", c.c_max));
    }
    let sp = spread(&variable);
    if !(sp < c.max_spread) {
        failures.push(format!("spread {sp:.3} across seeds"));
    }
    if runs.iter().filter(|r| r.1).any(|r| !(r.2.fitted_c <= c.reduction_c_max)) {
        failures.push(format!("constant-coefficient constant above {}", c.reduction_c_max));
    }
    Ok((runs, failures))
}

fn linear(cfg: &RunConfig, which: Which) -> Result<Outcome, CliError> {
    let grid = cfg.grid()?;
    let (runs, failures) = linear_check(&grid, cfg, which)?;
    let name = name_of(which);
    let mut csv = String::from("check,seed,constant_coefficients,lhs,rhs_total,ratio,fitted_c,pass\n");
    for (seed, constant, r) in &runs {
        let _ = writeln!(
            csv,
            "{name},{seed},{constant},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.lhs,
            r.rhs_total(),
            r.ratio,
            r.fitted_c,
            r.pass
        );
    }
    let variable: Vec<f64> = runs.iter().filter(|r| !r.1).map(|r| r.2.fitted_c).collect();
    let out = Output::create(cfg)?;
    out.write(&format!("{name}_estimate.csv"), &csv)?;
    out.chart(
        &format!("{name}_estimate.svg"),
        &LineChart::new(&format!("Fitted constants: {name}"), "seed", "C")
            .with(Series::new(
                "variable",
                runs.iter().filter(|r| !r.1).map(|r| (r.0 as f64, r.2.fitted_c)).collect(),
            ))
            .with(Series::new(
                "constant",
                runs.iter().filter(|r| r.1).map(|r| (r.0 as f64, r.2.fitted_c)).collect(),
            )),
    )?;
    let reports: Vec<Value> = runs
        .iter()
        .map(|(seed, constant, r)| json!({ "seed": seed, "constant_coefficients": constant, "report": r }))
        .collect();
    let outcome = verdict(failures);
    out.report(
        "estimates",
        cfg,
        &cfg.estimates,
        &outcome,
        json!({ "which": name, "spread": spread(&variable), "runs": reports }),
    )?;
    Ok(outcome)
}
