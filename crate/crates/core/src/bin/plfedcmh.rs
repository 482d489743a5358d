use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use plfedcmh::config::ExperimentConfig;
use plfedcmh::error::{Error, Result};
use plfedcmh::experiment;

#[derive(Parser)]
#[command(name = "plfedcmh", about = "Personalized federated cross-modal hashing simulator")]
struct Cli {
    /// Size of the global thread pool (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML); omitted fields take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override: training method
    #[arg(long)]
    method: Option<String>,
    /// Override: data split scheme
    #[arg(long, value_parser = ["iid", "noniid-equal", "noniid-unequal"])]
    split: Option<String>,
    /// Override: hash code lengths (repeatable)
    #[arg(long)]
    bits: Vec<usize>,
    /// Override: communication rounds
    #[arg(long)]
    rounds: Option<usize>,
    /// Override: master seeds (repeatable)
    #[arg(long)]
    seed: Vec<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(method) = &self.method {
            config.method = method.clone();
        }
        if let Some(split) = &self.split {
            config.partition.scheme = split.clone();
        }
        if !self.bits.is_empty() {
            config.bits = self.bits.clone();
        }
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if !self.seed.is_empty() {
            config.seeds = self.seed.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write its feature files
    Generate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Partition the configured dataset across clients and write JSON
    Partition {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output file (JSON)
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the full (bits x seeds) grid and write a run directory
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run directory to create
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute the MAP report of a run directory from its checkpoints
    Eval {
        /// Run directory produced by `train`
        #[arg(long)]
        run: PathBuf,
    },
    /// Merge the reports of two or more runs into one comparison table
    Compare {
        /// Run directories to merge (two or more)
        runs: Vec<PathBuf>,
        /// Optional directory for merged CSV/JSON output
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Generate { config, out } => {
            experiment::cmd_generate(&config.resolve()?, &out)?;
            println!("wrote dataset to {}", out.display());
        }
        Command::Partition { config, out } => {
            experiment::cmd_partition(&config.resolve()?, &out)?;
            println!("wrote partition to {}", out.display());
        }
        Command::Train { config, out } => {
            let report = experiment::cmd_train(&config.resolve()?, &out)?;
            print!("{}", experiment::rows_to_csv(&report.rows));
            println!("run directory: {}", out.display());
        }
        Command::Eval { run } => {
            let report = experiment::cmd_eval(&run)?;
            print!("{}", experiment::rows_to_csv(&report.rows));
        }
        Command::Compare { runs, out } => {
            let table = experiment::cmd_compare(&runs, out.as_deref())?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
