use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use headprune::harness::{self, ConfigFile, Overrides};
use headprune::{CostMode, Error, Strategy};

#[derive(Parser)]
#[command(name = "headprune", version, about = "Budgeted attention-head pruning search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pruning strategy and write its artifacts.
    Prune {
        strategy: Strategy,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a strategy and also dump every evaluation as a table-oracle file.
    RecordTable {
        strategy: Strategy,
        #[command(flatten)]
        run: RunArgs,
        /// Output table file [default: <out>/table.json].
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Re-run a configuration against a recorded table instead of its oracle.
    Replay {
        /// Defaults to the strategy in the config file.
        strategy: Option<Strategy>,
        #[arg(long)]
        table: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print a results table (CSV) across run directories.
    Summarize {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    cost_mode: Option<CostMode>,
}

impl RunArgs {
    fn overrides(&self, strategy: Option<Strategy>, table: Option<PathBuf>) -> Overrides {
        Overrides {
            strategy,
            budget: self.budget,
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            cost_mode: self.cost_mode,
            table,
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Prune { strategy, run } => {
            let config = ConfigFile::load(&run.config)?.resolve(&run.overrides(Some(strategy), None))?;
            let artifacts = harness::run(&config, None)?;
            println!("{}", artifacts.report.display());
        }
        Command::RecordTable { strategy, run, table } => {
            let config = ConfigFile::load(&run.config)?.resolve(&run.overrides(Some(strategy), None))?;
            let table = table.unwrap_or_else(|| config.out.join("table.json"));
            let artifacts = harness::run(&config, Some(&table))?;
            println!("{}", artifacts.report.display());
            println!("{}", table.display());
        }
        Command::Replay { strategy, table, run } => {
            let config = ConfigFile::load(&run.config)?.resolve(&run.overrides(strategy, Some(table)))?;
            let artifacts = harness::run(&config, None)?;
            println!("{}", artifacts.report.display());
        }
        Command::Summarize { dirs } => {
            print!("{}", harness::summarize(&dirs)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
