//! `ssdgan` command-line front end.

mod commands;
mod out_dir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "ssdgan",
    version,
    about = "Spectral realness tools and a small GAN laboratory"
)]
struct Cli {
    /// Root directory for every output file.
    #[arg(long, env = "SSD_OUT_DIR", default_value = "out", global = true)]
    out_dir: PathBuf,

    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

/// Training settings shared by the training commands. Later sources win:
/// defaults, then `--config`, then `--set`, then the named flags.
#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sgan, ssd or ssd-reg.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// compact or preact.
    #[arg(long)]
    arch: Option<String>,
    /// Any configuration key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the reduced spectrum of an image as CSV.
    Phi {
        image: PathBuf,
        #[arg(long, default_value = "phi.csv")]
        csv: String,
    },
    /// Map of the difference between two folders' mean spectra.
    SpectrumDiff {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Output name; `.csv` and `.pgm` are appended.
        #[arg(long, default_value = "spectrum_diff")]
        out: String,
    },
    /// Fit the spectral classifier to real and fake image folders.
    TrainClassifier {
        real_dir: PathBuf,
        fake_dir: PathBuf,
        #[arg(long, default_value_t = 500)]
        steps: u64,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output stem for the checkpoint and log.
        #[arg(long, default_value = "classifier")]
        name: String,
    },
    /// Rank a folder's images by spectral realness.
    Score {
        ckpt: PathBuf,
        dir: PathBuf,
        #[arg(long, default_value = "scores.csv")]
        csv: String,
    },
    /// Train on the 16x16 checkerboard target.
    TrainToy {
        #[command(flatten)]
        train: TrainArgs,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// High-band gaps of sharpened images after plain and blurred pooling.
    DownsampleDemo {
        /// Extra images to add to the synthetic corpus.
        #[arg(long)]
        images: Option<PathBuf>,
    },
    /// Discriminator response to spectral band modulation.
    Probe {
        #[arg(long)]
        ckpt: PathBuf,
        /// Bands as LO:HI fractions of the largest radius.
        #[arg(long, value_delimiter = ',', default_value = "0:1,0.75:1")]
        bands: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
        alphas: Vec<f64>,
        /// Images to probe with; defaults to the checkerboard target.
        #[arg(long)]
        images: Option<PathBuf>,
    },
    /// Spectral training across blend weights and seeds.
    LambdaSweep {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long)]
        seeds: Option<String>,
    },
    /// Plain versus spectral training across seeds.
    ToyExperiment {
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        seeds: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("ssdgan: {msg}");
            ExitCode::FAILURE
        }
    }
}
