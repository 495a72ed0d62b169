//! The `ctrkit` command line: generate, augment, train, infer, evaluate and
//! overlay.
//!
//! Every numeric option can also come from a `key = value` file passed with
//! `--config`; flags win over the file. Exit codes: 0 success, 1 usage error,
//! 2 data error, 3 internal error.

mod commands;
pub mod config;
pub mod overlay;

use std::ffi::OsString;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub use commands::PredictionRecord;
pub use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ctrkit", version, about = "Cardiothoracic ratio measurement toolkit")]
pub struct Cli {
    /// Plain-text `key = value` file with defaults for the subcommand's options.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic phantom dataset (images, masks, manifest).
    Generate(GenerateArgs),
    /// Upsample a dataset with joint image/mask augmentation.
    Augment(AugmentArgs),
    /// Train the segmentation network on a manifest's train/validation splits.
    Train(TrainArgs),
    /// Segment images and measure CTR.
    Infer(InferArgs),
    /// Score predictions against annotations.
    Evaluate(EvaluateArgs),
    /// Draw annotated and predicted boxes with a CTR caption.
    Overlay(OverlayArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of phantoms.
    #[arg(long)]
    pub n: Option<usize>,
    /// Canvas size in pixels.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub ctr_min: Option<f64>,
    #[arg(long)]
    pub ctr_max: Option<f64>,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Train/validation/test fractions, e.g. `0.8,0.1,0.1`.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub manifest: Option<String>,
    /// New samples as a fraction of the training rows.
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub factor: Option<f64>,
    #[arg(long)]
    pub min_lr: Option<f64>,
    #[arg(long)]
    pub base_channels: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Network input size; images are resized when they differ.
    #[arg(long)]
    pub image_size: Option<usize>,
    /// Train the plain U-Net without attention gates.
    #[arg(long)]
    pub no_attention: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct MorphArgs {
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub erosion_iters: Option<usize>,
    #[arg(long)]
    pub dilation_iters: Option<usize>,
    /// `square3` or `cross3`.
    #[arg(long)]
    pub element: Option<String>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub manifest: Option<String>,
    /// Only rows of this split (`train`, `validation`, `test`).
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long)]
    pub checkpoint: Option<String>,
    /// Skip the network and feed the manifest's stored masks to post-processing.
    #[arg(long)]
    pub gt_masks: bool,
    #[command(flatten)]
    pub morph: MorphArgs,
    /// Also write the selected heart/thorax components as PNG.
    #[arg(long)]
    pub save_masks: bool,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// JSON-lines predictions written by `infer`.
    #[arg(long)]
    pub predictions: Option<String>,
    /// VIA project JSON with heart/thorax rectangles.
    #[arg(long)]
    pub annotations: Option<String>,
    /// Manifest whose annotated or analytic CTR is the reference.
    #[arg(long)]
    pub manifest: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: Option<String>,
    /// Annotated heart box `x_min,y_min,x_max,y_max`.
    #[arg(long)]
    pub annotated_heart: Option<String>,
    #[arg(long)]
    pub annotated_thorax: Option<String>,
    /// Take the annotated boxes from a VIA project instead.
    #[arg(long)]
    pub annotations: Option<String>,
    #[arg(long)]
    pub predicted_heart: Option<String>,
    #[arg(long)]
    pub predicted_thorax: Option<String>,
    /// Take the predicted boxes from an `infer` predictions file instead.
    #[arg(long)]
    pub predictions: Option<String>,
    /// Output PNG.
    #[arg(long)]
    pub out: Option<String>,
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::InvalidSpec(_)
        | Error::SpecOutOfBounds(_)
        | Error::DegenerateTransform(_)
        | Error::InvalidBox(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CTRKIT_LOG", "info");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging();
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns its one-paragraph summary.
pub fn execute(cli: Cli) -> crate::Result<String> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(std::path::Path::new(path))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Generate(a) => commands::generate(&cfg, a),
        Command::Augment(a) => commands::augment(&cfg, a),
        Command::Train(a) => commands::train(&cfg, a),
        Command::Infer(a) => commands::infer(&cfg, a),
        Command::Evaluate(a) => commands::evaluate(&cfg, a),
        Command::Overlay(a) => commands::overlay(&cfg, a),
    }
}
