//! Run artifacts on disk: `<out>/<scenario>/{log.csv, summary.json, plan.csv, plot_*.svg}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plot::{render_channel, PLOT_CHANNELS};
use super::summary::{summarize, SummaryMetrics};
use super::world::{RunInfo, RunOutput};
use crate::error::Result;
use crate::trajectory::write_plans_csv;

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: SummaryMetrics,
    pub run: RunInfo,
}

/// Writes every artifact of `output` under `root/<scenario>/` and returns
/// that directory.
pub fn write_run(root: &Path, output: &RunOutput, plots: bool) -> Result<(PathBuf, RunReport)> {
    let dir = root.join(&output.info.scenario);
    std::fs::create_dir_all(&dir)?;
    output.log.save(&dir.join("log.csv"))?;
    let report = RunReport { metrics: summarize(&output.log), run: output.info.clone() };
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    if !output.plans.is_empty() {
        let file = std::io::BufWriter::new(std::fs::File::create(dir.join("plan.csv"))?);
        write_plans_csv(&output.plans, file)?;
    }
    if plots {
        for channel in PLOT_CHANNELS {
            std::fs::write(dir.join(format!("plot_{channel}.svg")), render_channel(&output.log, channel)?)?;
        }
    }
    Ok((dir, report))
}
