mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Overrides, Settings};

/// Block-wise crowd density estimation with completed local binary patterns
/// and a multi-class kernel SVM.
#[derive(Debug, Parser)]
#[command(name = "clbp", version, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract block features from a manifest, fit a model and save it
    Train,
    /// Label every block of a frame (CSV on stdout)
    Predict {
        /// Frame to label (PNG or binary PGM)
        frame: std::path::PathBuf,
        /// Write the frame with block labels drawn on it to this PNG
        #[arg(long, value_name = "FILE")]
        overlay: Option<std::path::PathBuf>,
    },
    /// Confusion matrix and accuracy on a labeled manifest. Without --model,
    /// trains on a stratified split of the manifest and tests on the rest.
    Evaluate {
        /// Fraction of frames held out when no model is given
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
        /// Mark the report as scored on the model's own training data
        #[arg(long)]
        sanity: bool,
    },
    /// Held-out accuracy of each descriptor at several block sizes
    Sweep {
        /// Block sizes, comma separated
        #[arg(long, value_delimiter = ',', default_value = "64,96,128")]
        sizes: Vec<u32>,
        /// Descriptors, comma separated
        #[arg(long, value_delimiter = ',', default_value = "clbp,lbp,glcm")]
        descriptors: Vec<String>,
        /// Fraction of frames held out for testing
        #[arg(long, default_value_t = 0.3)]
        test_fraction: f64,
    },
    /// Write a synthetic labeled corpus (PNG frames and manifest.txt)
    Synth {
        /// Frames per density level
        #[arg(long, default_value_t = 200)]
        per_class: usize,
        /// Frame side in pixels (at least 64)
        #[arg(long, default_value_t = 128)]
        frame_size: u32,
    },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CLBP_LOG", "warn"))
        .format_timestamp(None)
        .init();
}

/// `Ok(false)` when the command already reported its own errors.
fn run(cli: Cli) -> Result<bool, crowd_clbp::Error> {
    let settings = Settings::resolve(&cli.overrides)?;
    if let Some(jobs) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| crowd_clbp::Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    }
    eprint!("effective configuration:\n{}", settings.describe());
    match cli.command {
        Command::Train => commands::train(&settings)?,
        Command::Predict { frame, overlay } => commands::predict(&settings, &frame, overlay.as_deref())?,
        Command::Evaluate { test_fraction, sanity } => commands::evaluate(&settings, test_fraction, sanity)?,
        Command::Sweep {
            sizes,
            descriptors,
            test_fraction,
        } => return commands::sweep(&settings, &sizes, &descriptors, test_fraction),
        Command::Synth { per_class, frame_size } => commands::synth(&settings, per_class, frame_size)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("ERROR {}: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
