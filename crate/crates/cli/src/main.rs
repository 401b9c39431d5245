//! `coilbot`: run simulated coil-positioning experiments.
//!
//! Exit codes: 0 success, 2 bad configuration or input, 3 planning abort,
//! 4 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coilbot::controller::F2Sign;
use coilbot::experiments::sweep::save_table;
use coilbot::experiments::{
    presets, run_scenario, run_sweep, summarize, table_rows, write_run, ScenarioConfig, SceneConfig, SweepAxis,
    TimeSeriesLog,
};
use coilbot::geometry::{calibrate_camera_to_base, SamplesFile};
use coilbot::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_PLANNING: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "coilbot", version, about = "Simulated force/torque-controlled TMS coil positioning")]
struct Cli {
    /// Output root; each run writes to <out>/<scenario>/.
    #[arg(long, global = true, env = "COILBOT_OUT", default_value = "coilbot-out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the camera pose in the robot base frame from a samples file.
    Calibrate {
        /// JSON file with (b_T_e, e_T_t, c_T_t) samples.
        samples: PathBuf,
        /// Also write the result to <out>/calibration.json.
        #[arg(long)]
        save: bool,
    },
    /// Run one scenario and write log.csv, summary.json, plan.csv and plots.
    Run(RunArgs),
    /// Run a scenario once per value of one parameter and write a comparison table.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Parameter to vary (defaults to the scenario's own sweep).
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
    },
    /// Recompute summary metrics from an existing log.csv.
    Report { log: PathBuf },
    /// List the bundled scenarios.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Scene file (defaults to the bundled scene).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Scenario file; overrides --preset.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Bundled scenario name.
    #[arg(long, default_value = "scheduled")]
    preset: String,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Force-control duration override, s.
    #[arg(long)]
    duration: Option<f64>,
    /// Skip SVG plots.
    #[arg(long)]
    no_plots: bool,
    /// Sign convention of the error direction used for F2.
    #[arg(long, value_enum)]
    f2_sign: Option<F2SignArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Force,
    Kp,
}

#[derive(Clone, Copy, ValueEnum)]
enum F2SignArg {
    /// Toward the target: u = x_f - x_t.
    Target,
    /// Away from the target: u = x_t - x_f.
    Printed,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Planning(_) => EXIT_PLANNING,
        Error::Io(_) => EXIT_IO,
        Error::Csv(e) if e.is_io_error() => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Output-side failures are I/O failures whatever their source.
fn output_err(err: Error) -> Error {
    match err {
        Error::Io(_) => err,
        other => Error::Io(std::io::Error::other(other.to_string())),
    }
}

fn load_scene(path: Option<&Path>) -> Result<SceneConfig, Error> {
    match path {
        Some(p) => SceneConfig::load(p),
        None => presets::scene(),
    }
}

fn load_scenario(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut sc = match &args.scenario {
        Some(p) => ScenarioConfig::load(p)?,
        None => presets::scenario(&args.preset)?,
    };
    if let Some(seed) = args.seed {
        sc.seed = Some(seed);
    }
    if let Some(d) = args.duration {
        sc.duration_s = d;
    }
    if let Some(sign) = args.f2_sign {
        sc.controller.f2_sign = match sign {
            F2SignArg::Target => F2Sign::Target,
            F2SignArg::Printed => F2Sign::Printed,
        };
    }
    sc.validate()?;
    Ok(sc)
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn calibrate(out: &Path, samples: &Path, save: bool) -> Result<(), Error> {
    let text = std::fs::read_to_string(samples)
        .map_err(|e| Error::Config(format!("cannot read samples {}: {e}", samples.display())))?;
    let file = SamplesFile::from_json(&text)?;
    let cal = calibrate_camera_to_base(&file.samples)?;
    if cal.inconsistent {
        eprintln!(
            "warning: calibration samples disagree by up to {:.2} deg; the mean is reported anyway",
            cal.max_pairwise_rotation_deg
        );
    }
    print_json(&cal)?;
    if save {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("calibration.json"), serde_json::to_string_pretty(&cal)? + "\n")?;
    }
    Ok(())
}

fn run(out: &Path, args: &RunArgs) -> Result<(), Error> {
    let scene = load_scene(args.scene.as_deref())?;
    let scenario = load_scenario(args)?;
    let output = run_scenario(&scene, &scenario)?;
    if output.info.calibration_inconsistent {
        eprintln!("warning: calibration samples are inconsistent");
    }
    let (dir, report) = write_run(out, &output, !args.no_plots).map_err(output_err)?;
    eprintln!("wrote {}", dir.display());
    print_json(&report)
}

fn sweep(out: &Path, args: &RunArgs, axis: Option<AxisArg>, values: Option<Vec<f64>>) -> Result<(), Error> {
    let scene = load_scene(args.scene.as_deref())?;
    let base = load_scenario(args)?;
    let axis = match (axis, &base.sweep) {
        (Some(AxisArg::Force), _) => SweepAxis::Force,
        (Some(AxisArg::Kp), _) => SweepAxis::Kp,
        (None, Some(s)) => s.axis,
        (None, None) => return Err(Error::Config("no --axis given and the scenario defines no sweep".into())),
    };
    let values = match (values, &base.sweep) {
        (Some(v), _) => v,
        (None, Some(s)) if s.axis == axis => s.values.clone(),
        _ => return Err(Error::Config("no --values given".into())),
    };
    let runs = run_sweep(&scene, &base, axis, &values)?;
    for r in &runs {
        write_run(out, &r.output, !args.no_plots).map_err(output_err)?;
    }
    let rows = table_rows(axis, &runs);
    let table = out.join(format!("{}_sweep_{axis}.csv", base.name));
    save_table(&rows, &table).map_err(output_err)?;
    eprintln!("wrote {}", table.display());
    print_json(&rows)
}

fn report(log: &Path) -> Result<(), Error> {
    let log = TimeSeriesLog::load(log).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", log.display())),
        other => other,
    })?;
    print_json(&summarize(&log))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Calibrate { samples, save } => calibrate(&cli.out, samples, *save),
        Command::Run(args) => run(&cli.out, args),
        Command::Sweep { run, axis, values } => sweep(&cli.out, run, *axis, values.clone()),
        Command::Report { log } => report(log),
        Command::Presets => {
            presets::names().for_each(|n| println!("{n}"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
