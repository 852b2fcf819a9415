//! `magtrack` — batch front end for the sensor-network tracking toolkit.
//!
//! Subcommands mirror the experiment suite: `crlb-map` evaluates bound maps
//! (and per-step bounds along the configured trajectory), `track` emits a
//! single-trial trace, `montecarlo` runs the aggregate tracking study,
//! `resilience` sweeps sensor outages, and `validate-config` checks a
//! scenario file. Every run writes a manifest listing the emitted files with
//! content hashes; identical inputs reproduce identical hashes.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric failure.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use magtrack_core::config::ScenarioConfig;
use magtrack_core::{crlb, experiments, report, Error as CoreError};

use manifest::ManifestBuilder;

#[derive(Parser)]
#[command(name = "magtrack", version, about = "Undersea magnetic sensor-network tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate √Tr(CRLB) maps and per-step bounds along the trajectory
    CrlbMap(CrlbMapArgs),
    /// Run one tracking trial and emit its estimate/error trace
    Track(RunArgs),
    /// Run the Monte Carlo tracking study (RMSE + failure rate)
    Montecarlo(McArgs),
    /// Run the sensor-outage resilience sweep
    Resilience(McArgs),
    /// Parse and validate a scenario config
    ValidateConfig(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Override the master seed from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = auto)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct CrlbMapArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Add a log10 column to map CSVs
    #[arg(long)]
    log10: bool,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Override the number of Monte Carlo runs
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario config file (JSON)
    #[arg(long)]
    config: PathBuf,
}

enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(_)
            | CoreError::InvalidGeometry(_)
            | CoreError::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            CoreError::NotPositiveDefinite(_)
            | CoreError::SingularMatrix { .. }
            | CoreError::DegenerateGeometry
            | CoreError::ZeroField => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::CrlbMap(args) => cmd_crlb_map(args),
        Command::Track(args) => cmd_track(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Resilience(args) => cmd_resilience(args),
        Command::ValidateConfig(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>, runs: Option<usize>) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if let Some(seed) = seed {
        cfg.experiment.master_seed = seed;
    }
    if let Some(runs) = runs {
        cfg.experiment.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // ignore failure when a pool already exists (e.g. repeated in-process use)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn cmd_crlb_map(args: CrlbMapArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load_config(&args.run.config, args.run.seed, None)?;
    init_threads(args.run.threads);
    let map_section = cfg
        .map
        .as_ref()
        .ok_or_else(|| CliError::Config("map: section required for crlb-map".into()))?;
    let region = map_section.region();
    let moment = cfg.moment();
    let sigma = cfg.noise.std_tesla;

    let mut manifest = ManifestBuilder::new("crlb-map", &args.run.config, &cfg)?;
    for kind in cfg.map_kinds() {
        let array = cfg.build_array(Some(kind), None)?;
        let map = crlb::crlb_map(&array, &region, map_section.target_z, &moment, sigma)?;
        let csv = report::render_crlb_map_csv(&map, args.log10);
        manifest.emit(&args.run.out, &format!("crlb_map_{kind}.csv"), &csv)?;
    }
    if cfg.trajectory.is_some() {
        let trajectory = cfg.build_trajectory()?;
        let scalar_array = cfg.build_array(Some(magtrack_core::sensing::ModelKind::Scalar), None)?;
        let vector_array = cfg.build_array(Some(magtrack_core::sensing::ModelKind::Vector), None)?;
        let scalar = crlb::along_trajectory(&scalar_array, &trajectory, &moment, sigma)?;
        let vector = crlb::along_trajectory(&vector_array, &trajectory, &moment, sigma)?;
        let csv = report::render_crlb_trajectory_csv(&scalar, &vector);
        manifest.emit(&args.run.out, "crlb_trajectory.csv", &csv)?;
    }
    manifest.finish(&args.run.out, started.elapsed())?;
    Ok(())
}

fn cmd_track(args: RunArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load_config(&args.config, args.seed, None)?;
    init_threads(args.threads);
    let array = cfg.build_array(None, None)?;
    let mut manifest = ManifestBuilder::new("track", &args.config, &cfg)?;

    // an unobservable network still runs, but the manifest says so
    let trajectory = cfg.build_trajectory()?;
    let fim = crlb::total_fim(
        &array,
        &trajectory.states[0].position,
        &cfg.moment(),
        cfg.noise.std_tesla,
    )?;
    if !crlb::sqrt_trace_crlb(&fim).is_observable() {
        manifest.warn(format!(
            "geometry is UNOBSERVABLE at the initial target position (FIM rank {} < 3)",
            fim.rank()
        ));
    }

    let (trajectory, result) = experiments::run_trial_track(&cfg, &array, 0)?;
    if let Some(step) = result.diverged_at {
        manifest.warn(format!("filter diverged at step {step}"));
    }
    manifest.emit(&args.out, "trajectory.csv", &report::render_trajectory_csv(&trajectory))?;
    manifest.emit(&args.out, "track.csv", &report::render_track_csv(&result))?;
    manifest.finish(&args.out, started.elapsed())?;
    Ok(())
}

fn cmd_montecarlo(args: McArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load_config(&args.run.config, args.run.seed, args.runs)?;
    init_threads(args.run.threads);
    let mut manifest = ManifestBuilder::new("montecarlo", &args.run.config, &cfg)?;
    let aggregate = experiments::monte_carlo(&cfg)?;
    manifest.emit(&args.run.out, "rmse.csv", &report::render_rmse_csv(&aggregate))?;
    manifest.emit(
        &args.run.out,
        "failure_summary.json",
        &report::render_failure_json(&cfg, &aggregate),
    )?;
    manifest.finish(&args.run.out, started.elapsed())?;
    Ok(())
}

fn cmd_resilience(args: McArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = load_config(&args.run.config, args.run.seed, args.runs)?;
    init_threads(args.run.threads);
    if cfg.experiment.failed_counts.is_empty() {
        return Err(CliError::Config(
            "experiment.failed_counts must be non-empty for resilience".into(),
        ));
    }
    let mut manifest = ManifestBuilder::new("resilience", &args.run.config, &cfg)?;
    let entries =
        experiments::resilience_study(&cfg, &cfg.experiment.failed_counts, cfg.experiment.runs)?;
    manifest.emit(
        &args.run.out,
        "resilience.csv",
        &report::render_resilience_csv(&entries),
    )?;
    manifest.finish(&args.run.out, started.elapsed())?;
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, None, None)?;
    let array = cfg.build_array(None, None)?;
    println!(
        "ok: {} {} sensors ({}-dimensional stacked measurement), noise {} pT",
        array.len(),
        array.model_kind(),
        array.measurement_dim(),
        cfg.noise.std_tesla / 1e-12
    );
    if cfg.trajectory.is_some() {
        let trajectory = cfg.build_trajectory()?;
        println!(
            "ok: trajectory with {} steps at dt {} s",
            trajectory.len(),
            trajectory.dt
        );
    }
    if let Some(map) = &cfg.map {
        println!(
            "ok: map {}x{} nodes over [{}, {}] x [{}, {}]",
            map.resolution[0],
            map.resolution[1],
            map.x_extent[0],
            map.x_extent[1],
            map.y_extent[0],
            map.y_extent[1]
        );
    }
    Ok(())
}
