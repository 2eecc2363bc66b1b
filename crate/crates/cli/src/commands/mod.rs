//! Subcommand bodies. Each writes its artifacts and `report.json` into the
//! output directory and returns the outcome that decides the exit code.

pub mod checks;
pub mod estimates;
pub mod runs;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::svg::LineChart;
use crate::{CliError, Outcome};

pub struct Output {
    dir: PathBuf,
    svg: bool,
}

impl Output {
    pub fn create(cfg: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Self {
            dir: cfg.out.clone(),
            svg: cfg.svg,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        fs::write(self.path(name), contents)?;
        Ok(())
    }

    pub fn chart(&self, name: &str, chart: &LineChart) -> Result<(), CliError> {
        if self.svg {
            self.write(name, &chart.render())?;
        }
        Ok(())
    }

    /// Writes `report.json`: command, verdict, versions, the global keys, the
    /// command's own table and its results. The output path is left out so
    /// that reports from different directories compare equal.
    pub fn report<C: Serialize>(
        &self,
        command: &str,
        cfg: &RunConfig,
        section: &C,
        outcome: &Outcome,
        results: Value,
    ) -> Result<(), CliError> {
        let (pass, failures) = match outcome {
            Outcome::Pass => (true, Vec::new()),
            Outcome::Fail(f) => (false, f.clone()),
            Outcome::Abort(r) => (false, vec![format!("abort: {r}")]),
        };
        let report = json!({
            "command": command,
            "pass": pass,
            "failures": failures,
            "versions": {
                "visco-cli": env!("CARGO_PKG_VERSION"),
                "visco-core": visco_core::VERSION,
            },
            "global": {
                "dim": cfg.dim,
                "grid": cfg.grid,
                "mu": cfg.mu,
                "seed": cfg.seed,
            },
            "config": section,
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
        text.push('\n');
        self.write("report.json", &text)
    }
}

/// `Pass` when no check failed.
pub fn verdict(failures: Vec<String>) -> Outcome {
    if failures.is_empty() {
        Outcome::Pass
    } else {
        Outcome::Fail(failures)
    }
}

/// `max / min` of positive values; 1 for an empty or all-zero set.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 || values.is_empty() {
        1.0
    } else if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
