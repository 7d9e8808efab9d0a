//! `genrekit`: dataset preparation, feature extraction, training, evaluation
//! and prediction for music genre classification.

mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use genrekit::dataio::InputMode;

use crate::commands::*;
use crate::config::CommonArgs;
use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "genrekit", version, about = "Music genre classification pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment GENRE/SONG.wav files into clips and draw a song-disjoint split.
    Prep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        train_per_genre: Option<usize>,
        #[arg(long)]
        test_per_genre: Option<usize>,
    },
    /// Compute mel spectrograms or 51-value feature vectors for a manifest.
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_mode)]
        mode: InputMode,
    },
    /// Train a deep (cnn, rnn, parallel, crnn) or classical (logreg, knn) model.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory written by `extract`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "crnn")]
        arch: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Score a checkpoint on the test split and write reports and plots.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Print class probabilities for one audio file.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        wav: PathBuf,
    },
    /// Summarise a run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Write synthetic GENRE/SONG.wav audio for trying the pipeline.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        classes: usize,
        #[arg(long, default_value_t = 4)]
        songs: usize,
        #[arg(long, default_value_t = 95.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_mode(s: &str) -> Result<InputMode, String> {
    s.parse().map_err(|e: genrekit::Error| e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Prep { common, input, train_per_genre, test_per_genre } => {
            prep(PrepArgs { common, input, train_per_genre, test_per_genre })
        }
        Command::Extract { common, manifest, mode } => extract(ExtractArgs { common, manifest, mode }),
        Command::Train { common, data, arch, epochs, batch_size, lr, patience, k } => {
            train(TrainArgs { common, data, arch, epochs, batch_size, lr, patience, k })
        }
        Command::Eval { common, checkpoint, data } => evaluate(EvalArgs { common, checkpoint, data }),
        Command::Predict { checkpoint, wav } => predict(PredictArgs { checkpoint, wav }),
        Command::Report { run_dir } => report(ReportArgs { run_dir }),
        Command::Synth { out, classes, songs, seconds, seed } => {
            synth(SynthArgs { out, classes, songs, seconds, seed })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
