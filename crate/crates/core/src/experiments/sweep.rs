//! One-parameter sweeps over a base scenario.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SceneConfig, SweepAxis};
use super::summary::{summarize, SummaryMetrics};
use super::world::{run_scenario, RunOutput};
use crate::error::{Error, Result};

pub const FORCE_VALUES: [f64; 5] = [5.0, 10.0, 20.0, 30.0, 40.0];
pub const KP_VALUES: [f64; 5] = [0.0, 1.0, 2.0, 4.0, 4.5];

/// `base` with one parameter replaced. The name gains an `_<axis><value>`
/// suffix so sweep members get distinct output directories.
pub fn scenario_for(base: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<ScenarioConfig> {
    let mut sc = base.clone();
    sc.sweep = None;
    match axis {
        SweepAxis::Force => sc.controller.fixed_force_n = Some(value),
        SweepAxis::Kp => sc.controller.k_p = value,
    }
    sc.name = format!("{}_{axis}{value}", base.name);
    sc.validate()?;
    Ok(sc)
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub value: f64,
    pub scenario: ScenarioConfig,
    pub output: RunOutput,
    pub summary: SummaryMetrics,
}

/// Runs every value in parallel. Results keep the order of `values`.
pub fn run_sweep(scene: &SceneConfig, base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRun>> {
    if values.is_empty() {
        return Err(Error::config("sweep needs at least one value"));
    }
    let scenarios = values.iter().map(|&v| scenario_for(base, axis, v)).collect::<Result<Vec<_>>>()?;
    scenarios
        .into_par_iter()
        .zip(values.par_iter())
        .map(|(scenario, &value)| {
            let output = run_scenario(scene, &scenario)?;
            let summary = summarize(&output.log);
            Ok(SweepRun { value, scenario, output, summary })
        })
        .collect()
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTableRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scenario: String,
    pub e_converged: Option<f64>,
    pub t_below_5mm: Option<f64>,
    pub t_above_20n: Option<f64>,
    pub steady_ratio: Option<f64>,
    pub min_fc_during_motion: Option<f64>,
    pub t_reconverge_3mm: Option<f64>,
    pub steady_abs_e_n: Option<f64>,
    pub steady_abs_e_p: Option<f64>,
    pub steady_theta_deg: Option<f64>,
}

pub fn table_rows(axis: SweepAxis, runs: &[SweepRun]) -> Vec<SweepTableRow> {
    runs.iter()
        .map(|r| {
            let s = &r.summary;
            SweepTableRow {
                axis,
                value: r.value,
                scenario: r.scenario.name.clone(),
                e_converged: s.e_converged,
                t_below_5mm: s.t_below_5mm,
                t_above_20n: s.t_above_20n,
                steady_ratio: s.steady_ratio,
                min_fc_during_motion: s.min_fc_during_motion,
                t_reconverge_3mm: s.t_reconverge_3mm,
                steady_abs_e_n: s.steady_abs_e_n,
                steady_abs_e_p: s.steady_abs_e_p,
                steady_theta_deg: s.steady_theta_deg,
            }
        })
        .collect()
}

pub fn write_table<W: Write>(rows: &[SweepTableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_table(rows: &[SweepTableRow], path: &Path) -> Result<()> {
    write_table(rows, std::io::BufWriter::new(std::fs::File::create(path)?))
}
