use std::path::PathBuf;
use std::process::ExitCode;

use bangbang_cli::{run_experiment, Case, CliError, ExperimentConfig, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bangbang", version, about = "Semismooth Newton solvers for bang-bang control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one experiment and writes table.csv, trace and VTK files.
    Run {
        /// JSON experiment file; flags below override its entries.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        case: Option<Case>,
        #[arg(long, allow_negative_numbers = true)]
        ub: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        alpha: Option<f64>,
        /// Comma-separated subdivisions per axis, e.g. 8,16,32.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long = "max-iter")]
        max_iter: Option<usize>,
        /// Writes 0.0000 in the time column so repeated runs are byte-identical.
        #[arg(long)]
        no_timing: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let Command::Run {
        config,
        case,
        ub,
        alpha,
        levels,
        out,
        tol,
        max_iter,
        no_timing,
    } = cli.command;
    let file = config.as_deref().map(ExperimentConfig::from_file).transpose()?;
    let overrides = Overrides {
        case,
        u_b: ub,
        alpha,
        levels,
        output: out,
        tolerance: tol,
        max_iterations: max_iter,
        no_timing,
    };
    let config = ExperimentConfig::resolve(file, overrides)?;
    let report = run_experiment(&config)?;
    println!("{:>8} {:>6} {:>6} {:>7} {:>9} converged", "nodes", "iters", "facts", "solves", "time_s");
    for row in report.table() {
        println!(
            "{:>8} {:>6} {:>6} {:>7} {:>9.4} {}",
            row.nodes, row.iters, row.facts, row.solves, row.time_s, row.converged
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
