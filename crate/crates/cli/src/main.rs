//! `qulog`: extract, train, assess, explain, analyze and evaluate log
//! instructions from the command line.
//!
//! Every subcommand also reads its options from a JSON file given with
//! `--config`; keys are the long flag names with underscores. Flags win
//! over the file, the file wins over `QULOG_SEED`.

mod commands;
mod options;

use clap::{Parser, Subcommand};
use options::{AnalyzeArgs, AssessArgs, EvalArgs, ExplainArgs, ExtractArgs, TrainArgs};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qulog", version, about = "Log instruction quality assessment")]
struct Cli {
    /// JSON file with options for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract log instructions from a source tree into a JSONL dataset.
    Extract(ExtractArgs),
    /// Train a level or linguistic model.
    Train(TrainArgs),
    /// Score instructions with a trained model, disagreements first.
    Assess(AssessArgs),
    /// Rank the tokens of a static text by their contribution.
    Explain(ExplainArgs),
    /// Entropy and overlap statistics of a dataset.
    Analyze(AnalyzeArgs),
    /// Evaluate the model settings and baselines under a protocol.
    Eval(EvalArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Extract(a) => options::resolve(a, config).and_then(commands::extract),
        Command::Train(a) => options::resolve(a, config).and_then(commands::train),
        Command::Assess(a) => options::resolve(a, config).and_then(commands::assess),
        Command::Explain(a) => options::resolve(a, config).and_then(commands::explain),
        Command::Analyze(a) => options::resolve(a, config).and_then(commands::analyze),
        Command::Eval(a) => options::resolve(a, config).and_then(commands::eval),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
