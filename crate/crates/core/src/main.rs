use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use constraint_ensembles::cli::{load_config, print_schema, run, Experiment, OutputFormat, Overrides, RunError};

#[derive(Parser)]
#[command(name = "cens", version, about = "Constrained-clock ensembles and parametrized classical dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix (overrides the config).
    #[arg(long)]
    output: Option<String>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Seed for randomized models (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    Canonical(RunArgs),
    Microcanonical(RunArgs),
    Compare(RunArgs),
    ClassicalHamilton(RunArgs),
    ClassicalMaupertuis(RunArgs),
    ReparCheck(RunArgs),
    ProjectorXcheck(RunArgs),
    /// Print the JSON schema of the run configuration.
    Schema,
}

fn execute(experiment: Experiment, args: RunArgs) -> Result<(), RunError> {
    let config = load_config(&args.config)?;
    let overrides = Overrides {
        output: args.output,
        format: args.format,
        seed: args.seed,
    };
    let out = run(&config, experiment, &overrides)?;
    out.write()?;
    let summary = serde_json::to_string_pretty(&out.summary).expect("serializable");
    let _ = writeln!(std::io::stdout(), "{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Schema => {
            let _ = writeln!(std::io::stdout(), "{}", print_schema());
            return ExitCode::SUCCESS;
        }
        Command::Canonical(a) => (Experiment::Canonical, a),
        Command::Microcanonical(a) => (Experiment::Microcanonical, a),
        Command::Compare(a) => (Experiment::Compare, a),
        Command::ClassicalHamilton(a) => (Experiment::ClassicalHamilton, a),
        Command::ClassicalMaupertuis(a) => (Experiment::ClassicalMaupertuis, a),
        Command::ReparCheck(a) => (Experiment::ReparCheck, a),
        Command::ProjectorXcheck(a) => (Experiment::ProjectorXcheck, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
