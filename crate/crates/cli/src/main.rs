use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use log::info;
use serde_json::json;

use swarm_core::counterexample::counterexample;
use swarm_core::experiments::{run_experiment, run_sweep};
use swarm_core::io::{self, ExperimentPlan, IoError};
use swarm_core::scenarios::{Scenario, ScenarioError};
use swarm_core::taxonomy::categorize;
use swarm_core::{aggregation, BimodalController, SimConfig, WorldParams};

/// Prints to stdout, ending quietly when the reader has gone away.
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let mut out = std::io::stdout().lock();
        if writeln!(out, $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

#[derive(Parser)]
#[command(name = "swarm", version, about = "Simulate and verify aggregation of differential-drive robot swarms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and print the outcome as JSON.
    Simulate {
        scenario: PathBuf,
        /// Write sampled poses as CSV.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Write an SVG plot of the trajectories.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a batch or sweep described by an experiment file.
    Experiment {
        spec: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Write a nonaggregating scenario for a controller.
    Counterexample {
        /// Wheel speeds v_l0 v_r0 v_l1 v_r1, each in [-1, 1].
        #[arg(num_args = 4, allow_negative_numbers = true, required = true)]
        controller: Vec<f64>,
        /// Robot count, where the chosen family allows it.
        #[arg(long)]
        n: Option<usize>,
        /// Output file; the scenario is printed to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the movement category of a controller, e.g. CB-RS.
    Classify {
        #[arg(num_args = 4, allow_negative_numbers = true, required = true)]
        controller: Vec<f64>,
    },
    /// Report whether a scenario's initial state is aggregated.
    Check { scenario: PathBuf },
}

enum Failure {
    /// Bad arguments or input files.
    Input(anyhow::Error),
    /// A generator could not produce a state that passes its validator.
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(_) | IoError::Csv(_) => Failure::Runtime(e.into()),
            _ => Failure::Input(e.into()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn controller(values: &[f64]) -> Result<BimodalController, Failure> {
    let arr: [f64; 4] = values.try_into().map_err(|_| input(anyhow!("expected 4 wheel speeds")))?;
    BimodalController::from_array(arr).context("invalid controller").map_err(Failure::Input)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(Failure::Input)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    io::scenario_from_json(&read(path)?)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Input)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display())).map_err(Failure::Runtime)
}

fn simulate(path: &Path, trajectory: Option<&Path>, svg: Option<&Path>) -> CmdResult {
    let mut scenario = load_scenario(path)?;
    scenario.sim.record_trajectory = trajectory.is_some() || svg.is_some();
    info!("simulating {} robots from {}", scenario.initial.len(), path.display());
    let outcome = scenario.run().map_err(runtime)?;
    let samples = outcome.trajectory.as_deref().unwrap_or_default();
    if let Some(p) = trajectory {
        let mut buf = Vec::new();
        io::write_trajectory_csv(&mut buf, samples)?;
        write(p, buf)?;
    }
    if let Some(p) = svg {
        write(p, io::trajectory_svg(samples, &scenario.initial.world))?;
    }
    emit!("{}", serde_json::to_string_pretty(&io::outcome_json(&outcome)).map_err(runtime)?);
    Ok(())
}

fn experiment(path: &Path, workers: usize, out_dir: &Path) -> CmdResult {
    let plan = io::experiment_from_json(&read(path)?, workers)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::Input)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display())).map_err(runtime)?;
    let (csv_path, json_path) = (out_dir.join("results.csv"), out_dir.join("summary.json"));
    let mut csv = Vec::new();
    match plan {
        ExperimentPlan::Single(spec) => {
            info!("running {} runs", spec.num_runs);
            let result = run_experiment(&spec);
            io::write_result_csv(&mut csv, &result)?;
            let summary = io::result_summary_json(&result);
            write(&json_path, serde_json::to_string_pretty(&summary).map_err(runtime)?)?;
            emit!(
                "runs {}  aggregated {}  errors {}  rate {:.4}  95% CI [{:.4}, {:.4}]",
                result.runs.len(),
                result.aggregated,
                result.errors,
                result.aggregation_rate,
                result.wilson_95.0,
                result.wilson_95.1
            );
        }
        ExperimentPlan::Sweep { base, ring_sizes, settings } => {
            info!("sweeping {} ring sizes x {} settings x {} runs", ring_sizes.len(), settings.len(), base.num_runs);
            let cells = run_sweep(&base, &ring_sizes, &settings);
            io::write_sweep_csv(&mut csv, &cells)?;
            write(&json_path, serde_json::to_string_pretty(&io::sweep_summary_json(&cells)).map_err(runtime)?)?;
            emit!("{:>6}  {:>10}  {:>5}  {:>7}  {:>6}", "n_ring", "noise", "e", "rate", "errors");
            for c in &cells {
                emit!(
                    "{:>6}  {:>10}  {:>5}  {:>7.4}  {:>6}",
                    c.n_ring,
                    c.setting.noise_label(),
                    c.setting.restitution,
                    c.result.aggregation_rate,
                    c.result.errors
                );
            }
        }
    }
    write(&csv_path, csv)?;
    emit!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn emit_counterexample(values: &[f64], n: Option<usize>, out: Option<&Path>) -> CmdResult {
    let u = controller(values)?;
    let world = WorldParams::default();
    let ce = counterexample(&u, n, &world).map_err(|e| match e {
        ScenarioError::InvalidArgument(_) => input(e),
        _ => Failure::Validation(e.into()),
    })?;
    let label = format!("{} counterexample ({})", ce.category, ce.family);
    let scenario = Scenario::new(ce.state, u, SimConfig::default(), label, 0).map_err(|e| Failure::Validation(e.into()))?;
    let text = io::scenario_to_json(&scenario);
    match out {
        Some(p) => {
            write(p, &text)?;
            emit!("category: {}", ce.category);
            emit!("generator: {}", ce.family);
            emit!("robots: {}", scenario.initial.len());
            emit!("wrote {}", p.display());
        }
        None => emit!("{text}"),
    }
    Ok(())
}

fn check(path: &Path) -> CmdResult {
    let scenario = load_scenario(path)?;
    let report = aggregation::check(&scenario.initial);
    let out = json!({
        "aggregated": report.aggregated,
        "components": report.components,
        "largest_component_size": report.largest_component_size,
    });
    emit!("{}", serde_json::to_string_pretty(&out).map_err(runtime)?);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("SWARM_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { scenario, trajectory, svg } => simulate(scenario, trajectory.as_deref(), svg.as_deref()),
        Command::Experiment { spec, workers, out_dir } => experiment(spec, *workers, out_dir),
        Command::Counterexample { controller, n, out } => emit_counterexample(controller, *n, out.as_deref()),
        Command::Classify { controller: values } => controller(values).map(|u| emit!("{}", categorize(&u))),
        Command::Check { scenario } => check(scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(e)) => {
            eprintln!("validation failed: {e:#}");
            ExitCode::from(3)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
