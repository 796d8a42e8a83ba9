use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use percept_guard::io::read_json;
use percept_guard::log::VerdictLog;
use percept_guard::sim::{self, load_scenario, RunSummary};
use percept_guard::{
    compute_roi, EgoState, Error, ObjectListFrame, RunConfig, SensorBuffer, SensorSource, Timestamp, VerdictStatus,
    ZoneSet,
};

/// Failure exit code for unreadable, malformed or invalid inputs.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "percept-guard", version, about = "Camera/LiDAR object list consistency monitor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario, write its verdict log and score its expectations.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the seed stored in the scenario.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate one camera/LiDAR frame pair against an ego state.
    Validate {
        #[arg(long)]
        camera: PathBuf,
        #[arg(long)]
        lidar: PathBuf,
        #[arg(long)]
        ego: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Evaluation time in ms; defaults to the newest frame time.
        #[arg(long)]
        now: Option<u64>,
    },
    /// Print the clear and focus zone polygons for an ego state.
    Roi {
        #[arg(long)]
        ego: PathBuf,
        #[arg(long)]
        zones: Option<PathBuf>,
    },
    /// Score an existing verdict log against a scenario's expectations.
    Check {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, config, seed, out } => cmd_run(&scenario, config.as_deref(), seed, out.as_deref()),
        Command::Validate { camera, lidar, ego, config, now } => {
            cmd_validate(&camera, &lidar, &ego, config.as_deref(), now)
        }
        Command::Roi { ego, zones } => cmd_roi(&ego, zones.as_deref()),
        Command::Check { log, scenario } => cmd_check(&log, &scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn cmd_run(scenario: &Path, config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<u8, Error> {
    let mut scenario = load_scenario(scenario)?;
    let cfg = load_config(config)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let started = Instant::now();
    let log = sim::run(&scenario, &cfg)?;
    let wall_ms = started.elapsed().as_millis();
    if let Some(out) = out {
        log.write(out)?;
    }
    let summary = RunSummary::new(&scenario, &log, wall_ms);
    println!("{summary}");
    Ok(if summary.passed() { 0 } else { 1 })
}

fn cmd_validate(
    camera: &Path,
    lidar: &Path,
    ego: &Path,
    config: Option<&Path>,
    now: Option<u64>,
) -> Result<u8, Error> {
    let camera: ObjectListFrame = read_json(camera)?;
    let lidar: ObjectListFrame = read_json(lidar)?;
    let ego: EgoState = read_json(ego)?;
    let cfg = load_config(config)?;
    ego.validate()?;
    let now = Timestamp(now.unwrap_or(camera.frame_time.ms().max(lidar.frame_time.ms())));

    let mut buffers = Vec::new();
    for (frame, source) in [(camera, SensorSource::Camera), (lidar, SensorSource::Lidar)] {
        let mut buf = SensorBuffer::new(source, 1)?;
        buf.ingest(frame.clone())?;
        frame.validate()?;
        buffers.push(buf);
    }
    let verdict = percept_guard::evaluate(now, &buffers[0], &buffers[1], &ego, &cfg.validator, &cfg.zones)?;
    println!("{}", serde_json::to_string_pretty(&verdict).expect("verdicts serialize"));
    Ok(match verdict.status {
        VerdictStatus::Consistent => 0,
        VerdictStatus::Inconsistent => 1,
        VerdictStatus::NoData => 3,
    })
}

fn cmd_roi(ego: &Path, zones: Option<&Path>) -> Result<u8, Error> {
    let ego: EgoState = read_json(ego)?;
    let zones: ZoneSet = match zones {
        Some(p) => read_json(p)?,
        None => ZoneSet::default(),
    };
    let roi = compute_roi(&ego, &zones)?;
    println!("{}", serde_json::to_string_pretty(&roi).expect("regions serialize"));
    Ok(0)
}

fn cmd_check(log: &Path, scenario: &Path) -> Result<u8, Error> {
    let scenario = load_scenario(scenario)?;
    let log = VerdictLog::read(log)?;
    let summary = RunSummary::new(&scenario, &log, 0);
    println!("{summary}");
    Ok(if summary.passed() { 0 } else { 1 })
}
