//! The `perfmm` command line: `sweep`, `decompose`, `tune` and `validate`.
//!
//! Exit codes: 0 success, 1 configuration or validation failure, 2 runtime error.

pub mod config;
pub mod output;
pub mod validate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::harness::{decompose_run, run_sweep};
use crate::tuner::tune_grid;
use config::{ConfigError, FileConfig};
use output::{OutputBatch, RunManifest, SCHEMA_VERSION};
use validate::{validate_rows, Verdict};

#[derive(Debug, Parser)]
#[command(
    name = "perfmm",
    version,
    about = "Market making under performative price dynamics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML configuration file; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for path evaluation; never changes the numbers.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides the driver impact multiplier.
    #[arg(long)]
    pub impact_multiplier: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs every (strategy, gamma, xi) cell and writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Emits the price-formation series and one trading session.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        /// Forces the price noise to zero.
        #[arg(long)]
        zero_noise: bool,
    },
    /// Tunes theta multipliers for every cell and writes thetas.csv.
    Tune {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Checks the strategy ordering properties of an existing sweep.csv.
    Validate {
        /// Directory holding sweep.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn load(common: &CommonArgs) -> Result<(FileConfig, PathBuf), CliError> {
    let (mut cfg, base) = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => (FileConfig::default(), PathBuf::from(".")),
    };
    if let Some(m) = common.impact_multiplier {
        cfg.impact_multiplier = m;
    }
    Ok((cfg, base))
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(runtime)?;
            Ok(pool.install(f))
        }
    }
}

fn manifest(
    command: &str,
    seed: Option<u64>,
    cfg: &FileConfig,
    outputs: Vec<String>,
    started: Instant,
) -> RunManifest {
    RunManifest {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        master_seed: seed,
        config: cfg.snapshot(),
        outputs,
        duration_seconds: started.elapsed().as_secs_f64(),
    }
}

fn cmd_sweep(common: &CommonArgs, seed: Option<u64>) -> Result<(), CliError> {
    let started = Instant::now();
    let (mut cfg, base) = load(common)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let experiment = cfg.experiment(&base)?;
    let records = with_threads(common.threads, || run_sweep(&experiment))?.map_err(runtime)?;
    let mut batch = OutputBatch::new(&common.out).map_err(runtime)?;
    batch
        .stage("sweep.csv", |f| Ok(output::write_sweep_csv(&records, f)?))
        .map_err(runtime)?;
    let m = manifest("sweep", Some(cfg.seed), &cfg, batch.names(), started);
    batch.commit(&m).map_err(runtime)?;
    println!(
        "wrote {} rows to {}",
        records.len(),
        common.out.join("sweep.csv").display()
    );
    Ok(())
}

fn cmd_decompose(common: &CommonArgs, seed: Option<u64>, zero_noise: bool) -> Result<(), CliError> {
    let started = Instant::now();
    let (cfg, _) = load(common)?;
    let mut cell = cfg.decompose_cell()?;
    cell.zero_noise = zero_noise;
    let seed = seed.unwrap_or(cfg.seed);
    let trace = decompose_run(&cell, seed).map_err(runtime)?;
    let mut batch = OutputBatch::new(&common.out).map_err(runtime)?;
    batch
        .stage("decompose.csv", |f| {
            Ok(output::write_decompose_csv(&trace, f)?)
        })
        .map_err(runtime)?;
    batch
        .stage("session.csv", |f| Ok(output::write_session_csv(&trace, f)?))
        .map_err(runtime)?;
    let m = manifest("decompose", Some(seed), &cfg, batch.names(), started);
    batch.commit(&m).map_err(runtime)?;
    println!(
        "wrote {} steps to {}",
        trace.decomposition.len(),
        common.out.display()
    );
    Ok(())
}

fn cmd_tune(common: &CommonArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (cfg, base) = load(common)?;
    let tune_cfg = cfg.tune_config()?;
    let experiment = cfg.experiment(&base)?;
    let cells: Vec<(f64, f64)> = experiment.cells().collect();
    let template = experiment.cell(cells[0].0, cells[0].1).map_err(runtime)?;
    let (table, reports) =
        with_threads(common.threads, || tune_grid(&tune_cfg, &template, &cells))?
            .map_err(runtime)?;
    let mut batch = OutputBatch::new(&common.out).map_err(runtime)?;
    batch
        .stage("thetas.csv", |f| Ok(table.write_csv(f)?))
        .map_err(runtime)?;
    let m = manifest("tune", None, &cfg, batch.names(), started);
    batch.commit(&m).map_err(runtime)?;
    let exhausted = reports.iter().filter(|r| r.budget_exhausted).count();
    println!(
        "tuned {} cells ({} stopped on budget) into {}",
        table.rows.len(),
        exhausted,
        common.out.join("thetas.csv").display()
    );
    Ok(())
}

fn cmd_validate(dir: &Path) -> Result<(), CliError> {
    let path = dir.join("sweep.csv");
    let file =
        std::fs::File::open(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let rows =
        output::read_sweep_csv(file).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    let results = validate_rows(&rows);
    let mut failed = Vec::new();
    for r in &results {
        match &r.verdict {
            Verdict::Pass => println!("PASS {}", r.name),
            Verdict::Skipped(why) => println!("SKIP {} ({why})", r.name),
            Verdict::Fail(why) => {
                println!("FAIL {}: {why}", r.name);
                failed.push(r.name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "failed properties: {}",
            failed.join(", ")
        )))
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sweep { common, seed } => cmd_sweep(common, *seed),
        Command::Decompose {
            common,
            seed,
            zero_noise,
        } => cmd_decompose(common, *seed, *zero_noise),
        Command::Tune { common } => cmd_tune(common),
        Command::Validate { out } => cmd_validate(out),
    }
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
