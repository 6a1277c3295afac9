use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zrp_cli::{check_dir, run_command, CliError, Command, ExperimentConfig, Overrides, Which, OUT_ENV};

#[derive(Parser)]
#[command(name = "zrp", version, about = "Zero-range process experiments: statics, simulation, PDE and verification")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `ZRP_OUT` and `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replica count, overriding `run.replicas`.
    #[arg(long)]
    replicas: Option<usize>,
}

#[derive(Subcommand)]
enum Sub {
    /// Partition function, density and Φ̄ tables.
    Thermo(Common),
    /// Exact draws from the canonical measure.
    SampleCanonical(Common),
    /// Replicated trajectories with field snapshots and a manifest.
    Simulate(Common),
    /// Solve the hydrodynamic equation from the configured initial profile.
    Pde(Common),
    /// Run one verification statistic and write its verdict.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        which: Which,
    },
    /// Check every CSV file in a directory against its schema.
    Check { dir: PathBuf },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let overrides = Overrides {
        seed: common.seed,
        replicas: common.replicas,
        out: common.out.clone(),
        env_out: std::env::var_os(OUT_ENV).map(PathBuf::from),
    };
    cfg.apply(&overrides)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cmd, common) = match &cli.command {
        Sub::Thermo(c) => (Command::Thermo, c),
        Sub::SampleCanonical(c) => (Command::SampleCanonical, c),
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Pde(c) => (Command::Pde, c),
        Sub::Verify { common, which } => (Command::Verify(*which), common),
        Sub::Check { dir } => {
            for (path, rows) in check_dir(dir)? {
                println!("ok {} ({rows} rows)", path.display());
            }
            return Ok(());
        }
    };
    run_command(cmd, &load(common)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zrp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
