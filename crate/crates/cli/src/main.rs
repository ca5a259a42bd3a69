mod backend;
mod config;
mod evaluate;
mod files;
mod fuse;
mod synth;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Scoring, fusion and fixture tools for spoofing-aware speaker verification.
///
/// Exit status: 0 on success, 1 when inputs are readable but semantically
/// unacceptable, 2 when something cannot be read, written or parsed.
#[derive(Debug, Parser)]
#[command(name = "sasv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a score file against a trial protocol.
    Validate(evaluate::ValidateArgs),
    /// Report SASV-, SV- and SPF-EERs of a score file.
    Evaluate(evaluate::EvaluateArgs),
    /// Sum ASV and CM scores trial by trial.
    Fuse(fuse::FuseArgs),
    /// Train or apply the embedding-level back-end classifier.
    #[command(subcommand)]
    Backend(backend::BackendCommand),
    /// Write a synthetic protocol with scores or embeddings.
    Synth(synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(args) => evaluate::run_validate(args),
        Command::Evaluate(args) => evaluate::run_evaluate(args),
        Command::Fuse(args) => fuse::run_fuse(args),
        Command::Backend(backend::BackendCommand::Train(args)) => backend::run_train(args),
        Command::Backend(backend::BackendCommand::Score(args)) => backend::run_score(args),
        Command::Synth(args) => synth::run_synth(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
