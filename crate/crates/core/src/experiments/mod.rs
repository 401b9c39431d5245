//! Scenario runner: configuration, the simulated bench, logs and metrics.

pub mod config;
pub mod log;
pub mod output;
pub mod plot;
pub mod presets;
pub mod summary;
pub mod sweep;
pub mod world;

pub use config::{ScenarioConfig, SceneConfig, SweepAxis, SweepConfig};
pub use log::{LogRow, TimeSeriesLog};
pub use output::{write_run, RunReport};
pub use plot::render_channel;
pub use summary::{summarize, SummaryMetrics};
pub use sweep::{run_sweep, scenario_for, table_rows, SweepRun, SweepTableRow};
pub use world::{run_scenario, RunInfo, RunOutput, World};
