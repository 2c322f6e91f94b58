//! Scenario execution and artifact writing.

use std::fs;
use std::path::Path;

use oamsim_core::io;
use oamsim_core::photonsim::{
    bases_experiment, calibrate_noise, controlled_experiment, run_experiment, table1_experiments, Experiment, ScenarioRun,
};
use oamsim_core::{Circuit, NoiseModel, Setup};
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, RunConfig, Scenario};
use crate::verify::setups;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Noise from the config, with fitted efficiencies when targets are given.
pub fn effective_noise(cfg: &RunConfig) -> Result<(NoiseModel, Option<serde_json::Value>), CliError> {
    let Some(targets) = cfg.calibrate_targets else {
        return Ok((cfg.noise.clone(), None));
    };
    let cal = calibrate_noise(targets)?;
    let noise = NoiseModel {
        coupling_efficiency: cal.noise.coupling_efficiency.clone(),
        preparation_fidelity: cal.noise.preparation_fidelity.clone(),
        ..cfg.noise.clone()
    };
    let report = json!({
        "targets": targets,
        "expected_averages": cal.averages,
        "residual": cal.residual,
        "sweeps": cal.sweeps,
    });
    Ok((noise, Some(report)))
}

pub fn experiments(cfg: &RunConfig) -> Result<Vec<Experiment>, CliError> {
    let (single, ctrl) = setups(cfg)?;
    Ok(match cfg.scenario {
        Scenario::VerifyGates => return Err(CliError::Config("verify-gates writes no tables".into())),
        Scenario::Table1 => table1_experiments(&single)?,
        Scenario::Bases => vec![bases_experiment(&cfg.gate.circuit(&single)?, &single, cfg.basis)?],
        Scenario::Controlled => vec![controlled_experiment(cfg.gate, cfg.control, &ctrl)?],
        Scenario::CustomCircuit => {
            let path = cfg.circuit.as_ref().expect("validated");
            let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let circuit: Circuit =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let setup = Setup {
                basis: *circuit.basis(),
                ..single
            };
            vec![bases_experiment(&circuit, &setup, cfg.basis)?]
        }
    })
}

#[derive(Debug, Serialize)]
pub struct TableSummary {
    pub name: String,
    pub file: String,
    pub counts_file: String,
    pub efficiency: f64,
    pub min_expected: f64,
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs the configured scenario and writes tables plus a manifest into `cfg.out`.
pub fn run_scenario(cfg: &RunConfig) -> Result<(Vec<ScenarioRun>, Vec<TableSummary>), CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let (noise, calibration) = effective_noise(cfg)?;
    let runs = experiments(cfg)?
        .iter()
        .map(|e| run_experiment(e, &cfg.source, &noise, seed))
        .collect::<oamsim_core::Result<Vec<_>>>()?;
    fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let ext = cfg.format.extension();
    let mut summaries = Vec::new();
    for run in &runs {
        let file = format!("{}.{ext}", run.name);
        let counts_file = format!("{}_counts.{ext}", run.name);
        let (table, counts) = match cfg.format {
            Format::Csv => (io::conversion_table_to_csv(&run.table)?, io::count_table_to_csv(&run.counts)?),
            Format::Json => (io::conversion_table_to_json(&run.table)?, io::count_table_to_json(&run.counts)?),
        };
        write(&cfg.out.join(&file), &table)?;
        write(&cfg.out.join(&counts_file), &counts)?;
        summaries.push(TableSummary {
            name: run.name.clone(),
            file,
            counts_file,
            efficiency: run.efficiency()?,
            min_expected: run.expected_probabilities()?.into_iter().fold(1.0, f64::min),
        });
    }
    // The output location is left out so runs in different directories compare equal.
    let mut echo = serde_json::to_value(cfg)?;
    if let Some(obj) = echo.as_object_mut() {
        obj.remove("out");
    }
    let manifest = json!({
        "schema": io::SCHEMA,
        "tool": "oamsim",
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": cfg.scenario,
        "seed": seed.to_string(),
        "config": echo,
        "noise": noise,
        "calibration": calibration,
        "tables": summaries,
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write(&cfg.out.join(MANIFEST), &text)?;
    Ok((runs, summaries))
}
