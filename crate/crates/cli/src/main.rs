//! `trifinger`: runs the simulated experiments and writes CSV results.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 the robot shut
//! down or the run was aborted.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use trifinger_core::config::{ConfigError, RunConfig};
use trifinger_core::env::write_episode_summaries;
use trifinger_core::experiment::{
    run_bench, run_object_task, run_reach, write_bench_report, ExperimentError, ObjectTask,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "trifinger", version, about = "Simulated three-finger manipulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration; missing sections use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lift the cube along a vertical line.
    Lift {
        #[command(flatten)]
        common: Common,
        /// Run length in seconds [default: lift.run_time].
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Move the cube around a horizontal circle.
    Circle {
        #[command(flatten)]
        common: Common,
        /// Run length in seconds [default: circle.run_time].
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Fingertip reaching with the scripted IK policy.
    Reach {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        episodes: usize,
    },
    /// Control-loop throughput and QP latency.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Cycles of the robot loop to time.
        #[arg(long, default_value_t = 100_000)]
        cycles: usize,
        /// Number of QP solves to time.
        #[arg(long, default_value_t = 10_000)]
        qp_samples: usize,
    },
    /// Print the effective configuration as TOML.
    DumpConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Setup(msg) => Failure::Config(msg),
            e @ (ExperimentError::Io(_) | ExperimentError::Csv(_)) => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => Ok(RunConfig::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn object_task(common: &Common, task: ObjectTask, duration: Option<f64>) -> Result<(), Failure> {
    let cfg = load(common.config.as_deref())?;
    let duration = duration.unwrap_or(match task {
        ObjectTask::Lift => cfg.lift.run_time,
        ObjectTask::Circle => cfg.circle.run_time,
    });
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Failure::Config(format!("--duration must be positive, got {duration}")));
    }
    let (path, mut file) = create(&common.out, &format!("{}.csv", task.name()))?;
    let report = run_object_task(&cfg, task, duration, Some(&mut file))?;
    file.flush().map_err(|e| Failure::Config(e.to_string()))?;
    let e = report.final_error;
    println!("task: {}", task.name());
    println!("cycles: {}", report.cycles);
    println!("final_error_m: {:.6e} {:.6e} {:.6e}", e.x, e.y, e.z);
    println!("final_z_error_m: {:.6e}", e.z.abs());
    println!("rms_planar_error_m: {:.6e}", report.rms_planar_error);
    println!("rms_error_m: {:.6e}", report.rms_error);
    println!("max_equality_residual: {:.3e}", report.max_equality_residual);
    println!("held_cycles: {}", report.held_cycles);
    println!("trajectory: {}", path.display());
    Ok(())
}

fn reach(common: &Common, seed: u64, episodes: usize) -> Result<(), Failure> {
    let cfg = load(common.config.as_deref())?;
    let rows = run_reach(&cfg, episodes, seed)?;
    let (path, file) = create(&common.out, "reach.csv")?;
    write_episode_summaries(file, &rows).map_err(|e| Failure::Config(e.to_string()))?;
    if !rows.is_empty() {
        let mean = rows.iter().map(|r| r.mean_final_error()).sum::<f64>() / rows.len() as f64;
        println!("mean_final_error_m: {mean:.6e}");
    }
    println!("episodes: {}", rows.len());
    println!("summary: {}", path.display());
    Ok(())
}

fn bench(common: &Common, cycles: usize, qp_samples: usize) -> Result<(), Failure> {
    if cycles == 0 || qp_samples == 0 {
        return Err(Failure::Config("--cycles and --qp-samples must be positive".into()));
    }
    let cfg = load(common.config.as_deref())?;
    let report = run_bench(&cfg, cycles, qp_samples)?;
    let (_, file) = create(&common.out, "bench.csv")?;
    write_bench_report(file, &report).map_err(|e| Failure::Config(e.to_string()))?;
    write_bench_report(io::stdout().lock(), &report).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Lift { common, duration } => object_task(&common, ObjectTask::Lift, duration),
        Command::Circle { common, duration } => object_task(&common, ObjectTask::Circle, duration),
        Command::Reach { common, seed, episodes } => reach(&common, seed, episodes),
        Command::Bench { common, cycles, qp_samples } => bench(&common, cycles, qp_samples),
        Command::DumpConfig { config } => {
            print!("{}", load(config.as_deref())?.to_toml_string());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
