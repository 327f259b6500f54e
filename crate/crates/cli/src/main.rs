use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use riseff_cli::{parse_spec, run, CliError, ExperimentSpec};

#[derive(Parser)]
#[command(name = "riseff", version, about = "RIS-assisted uplink GEE/SE experiments")]
struct Cli {
    /// Override `master_seed` from the spec file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the sweep (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point and write results into the output directory.
    Run { spec: PathBuf },
    /// Parse the spec and print the resolved configuration.
    Validate { spec: PathBuf },
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ExperimentSpec, CliError> {
    let mut spec = parse_spec(path)?;
    if let Some(seed) = seed {
        spec.master_seed = seed;
    }
    Ok(spec)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { spec } => {
            let spec = load(&spec, cli.seed)?;
            println!("{}", serde_json::to_string_pretty(&spec.resolved()).expect("spec serializes"));
        }
        Command::Run { spec } => {
            let spec = load(&spec, cli.seed)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = cli.threads {
                if n == 0 {
                    return Err(CliError::Config("--threads must be at least 1".into()));
                }
                pool = pool.num_threads(n);
            }
            let pool = pool
                .build()
                .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
            let results = pool.install(|| run(&spec))?;
            log::info!("{} runs written to {}", results.len(), spec.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riseff: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
