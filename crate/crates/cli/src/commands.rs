use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ssdgan_core::experiments::{self, Band, ExperimentReport};
use ssdgan_core::gan::{metrics_csv, Trainer};
use ssdgan_core::io::{
    encode_checkpoint, grid_csv, load_checkpoint, log_magnitude_image, phi_csv, read_image,
    read_images, sample_grid, write_image, RunConfig,
};
use ssdgan_core::par::{self, Execution};
use ssdgan_core::realness::{unit_phi, SpectralClassifier};
use ssdgan_core::rng::{SeededRng, Stream};
use ssdgan_core::spectral::{self, SpectralVector};
use ssdgan_core::tensor_nn::{AdamConfig, AdamState};
use ssdgan_core::Image;

use crate::out_dir::OutDir;
use crate::{Cli, Command, TrainArgs};

pub fn run(cli: Cli) -> Result<()> {
    let out = OutDir::new(cli.out_dir);
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Phi { image, csv } => phi(&out, &image, &csv),
        Command::SpectrumDiff {
            dir_a,
            dir_b,
            out: name,
        } => spectrum_diff(&out, exec, &dir_a, &dir_b, &name),
        Command::TrainClassifier {
            real_dir,
            fake_dir,
            steps,
            lr,
            seed,
            name,
        } => train_classifier(&out, exec, &real_dir, &fake_dir, steps, lr, seed, &name),
        Command::Score { ckpt, dir, csv } => score(&out, exec, &ckpt, &dir, &csv),
        Command::TrainToy { train, resume } => train_toy(&out, &train, resume.as_deref()),
        Command::DownsampleDemo { images } => downsample_demo(&out, images.as_deref()),
        Command::Probe {
            ckpt,
            bands,
            alphas,
            images,
        } => probe(&out, &ckpt, &bands, &alphas, images.as_deref()),
        Command::LambdaSweep {
            train,
            lambdas,
            seeds,
        } => {
            let mut cfg = resolve_config(RunConfig::default(), &train)?;
            apply(&mut cfg, "lambdas", lambdas.as_deref())?;
            apply(&mut cfg, "seeds", seeds.as_deref())?;
            cfg.validate()?;
            let (report, _) = experiments::lambda_sweep(&cfg, exec)?;
            finish_report(&out, &report)
        }
        Command::ToyExperiment { train, seeds } => {
            let mut cfg = resolve_config(RunConfig::default(), &train)?;
            apply(&mut cfg, "seeds", seeds.as_deref())?;
            cfg.validate()?;
            let (report, _) = experiments::toy_experiment(&cfg, exec)?;
            finish_report(&out, &report)
        }
    }
}

fn apply(cfg: &mut RunConfig, key: &str, value: Option<&str>) -> Result<()> {
    if let Some(v) = value {
        cfg.set(key, v).with_context(|| format!("--{key}"))?;
    }
    Ok(())
}

fn resolve_config(base: RunConfig, args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut cfg = base;
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    bail!("{} line {}: expected key=value", path.display(), n + 1);
                };
                cfg.set(k.trim(), v)
                    .with_context(|| format!("{} line {}", path.display(), n + 1))?;
            }
            cfg
        }
        None => base,
    };
    for kv in &args.set {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got '{kv}'");
        };
        cfg.set(k.trim(), v)
            .with_context(|| format!("--set {kv}"))?;
    }
    apply(&mut cfg, "mode", args.mode.as_deref())?;
    apply(&mut cfg, "lambda", args.lambda.as_deref())?;
    apply(&mut cfg, "iterations", args.iters.as_deref())?;
    apply(&mut cfg, "seed", args.seed.as_deref())?;
    apply(&mut cfg, "arch", args.arch.as_deref())?;
    cfg.validate()?;
    Ok(cfg)
}

fn finish_report(out: &OutDir, report: &ExperimentReport) -> Result<()> {
    report.write(out.root())?;
    print!("{}", report.to_csv());
    Ok(())
}

fn phi(out: &OutDir, image: &Path, csv: &str) -> Result<()> {
    let img = read_image(image)?;
    let v = spectral::phi(&img)?;
    let path = out.write_text(csv, &phi_csv(&v))?;
    println!("wrote {} bins to {}", v.len(), path.display());
    Ok(())
}

fn images_only(dir: &Path) -> Result<Vec<Image>> {
    Ok(read_images(dir)?.into_iter().map(|(_, img)| img).collect())
}

fn spectrum_diff(out: &OutDir, exec: Execution, a: &Path, b: &Path, name: &str) -> Result<()> {
    let map = spectral::mean_spectrum_diff_with(exec, &images_only(a)?, &images_only(b)?)?;
    out.write_text(&format!("{name}.csv"), &grid_csv(&map)?)?;
    out.write_image(&format!("{name}.pgm"), &log_magnitude_image(&map)?)?;
    let peak = map.data().iter().copied().fold(0.0, f64::max);
    println!("largest difference {peak:?}");
    Ok(())
}

fn unit_phis(exec: Execution, images: &[Image]) -> Result<Vec<SpectralVector>> {
    Ok(par::map(exec, images, unit_phi)
        .into_iter()
        .collect::<ssdgan_core::Result<_>>()?)
}

#[allow(clippy::too_many_arguments)]
fn train_classifier(
    out: &OutDir,
    exec: Execution,
    real_dir: &Path,
    fake_dir: &Path,
    steps: u64,
    lr: f64,
    seed: u64,
    name: &str,
) -> Result<()> {
    let real = unit_phis(exec, &images_only(real_dir)?)?;
    let fake = unit_phis(exec, &images_only(fake_dir)?)?;
    let dim = real[0].len();
    if real.iter().chain(&fake).any(|v| v.len() != dim) {
        bail!("all images must share one size");
    }
    let mut c =
        SpectralClassifier::<f32>::new(dim, &mut SeededRng::new(seed, Stream::ClassifierInit));
    let mut adam = AdamState::new(
        AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        &c.store,
    );
    let mut log = String::from("step,objective\n");
    for step in 0..steps {
        let objective = c.train_step(&mut adam, &real, &fake)?;
        log.push_str(&format!("{step},{objective:?}\n"));
    }
    let correct = c
        .classify_batch(&real)?
        .iter()
        .filter(|&&p| p > 0.5)
        .count()
        + c.classify_batch(&fake)?
            .iter()
            .filter(|&&p| p < 0.5)
            .count();
    let tensors: Vec<_> = c
        .store
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n.to_string(), t.clone()))
        .collect();
    out.write_bytes(&format!("{name}.ckpt"), &encode_checkpoint(&tensors))?;
    out.write_text(&format!("{name}_log.csv"), &log)?;
    out.write_text(
        "config.txt",
        &format!(
            "real_dir={}\nfake_dir={}\nsteps={steps}\nlr={lr:?}\nseed={seed}\n",
            real_dir.display(),
            fake_dir.display()
        ),
    )?;
    println!(
        "training accuracy {}/{} after {steps} steps",
        correct,
        real.len() + fake.len()
    );
    Ok(())
}

fn score(out: &OutDir, exec: Execution, ckpt: &Path, dir: &Path, csv: &str) -> Result<()> {
    let c = SpectralClassifier::<f32>::from_tensors(&load_checkpoint(ckpt)?)?;
    let entries = read_images(dir)?;
    let images: Vec<Image> = entries.iter().map(|(_, i)| i.clone()).collect();
    let scores = c.classify_batch(&unit_phis(exec, &images)?)?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut text = String::from("rank,file,score\n");
    for (rank, &i) in order.iter().enumerate() {
        let file = entries[i]
            .0
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        text.push_str(&format!("{},{file},{:?}\n", rank + 1, scores[i]));
    }
    out.write_text(csv, &text)?;
    for (label, &i) in [("top", &order[0]), ("bottom", &order[order.len() - 1])] {
        let ext = if images[i].channels() == 3 {
            "ppm"
        } else {
            "pgm"
        };
        out.write_image(&format!("{label}.{ext}"), &images[i])?;
    }
    println!("scored {} images", entries.len());
    Ok(())
}

fn grid(samples: &ssdgan_core::tensor_nn::Tensor<f32>) -> ssdgan_core::Result<Image> {
    let rows = samples.shape()[0].div_ceil(8);
    sample_grid(samples, 8, rows)
}

fn train_toy(out: &OutDir, args: &TrainArgs, resume: Option<&Path>) -> Result<()> {
    let state = resume.map(load_checkpoint).transpose()?;
    let base = match &state {
        Some(s) => RunConfig::from_checkpoint(s)?,
        None => RunConfig::default(),
    };
    let cfg = resolve_config(base, args)?;
    let mut trainer = Trainer::new(cfg.gan.clone(), vec![experiments::toy_target()])?;
    if let Some(s) = &state {
        trainer.restore(s).context("resuming")?;
    }
    out.write_text("config.txt", &cfg.to_text())?;
    trainer.run(|eval| {
        let name = format!("samples_{:06}.pgm", eval.metrics.iteration);
        write_image(&out.root().join(name), &grid(&eval.samples)?)
    })?;
    let eval = trainer.evaluate()?;
    out.write_text("metrics.csv", &metrics_csv(trainer.history()))?;
    out.write_bytes("checkpoint.ckpt", &encode_checkpoint(&trainer.state()))?;
    out.write_image("samples.pgm", &grid(&eval.samples)?)?;
    println!(
        "iteration {}: spectral discrepancy {:?}, reconstruction error {:?}",
        trainer.iteration(),
        eval.metrics.spectral_discrepancy,
        trainer.reconstruction_error()?
    );
    Ok(())
}

fn downsample_demo(out: &OutDir, extra: Option<&Path>) -> Result<()> {
    let mut corpus = experiments::standard_corpus();
    if let Some(dir) = extra {
        for (path, img) in read_images(dir)? {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            corpus.push((stem, img));
        }
    }
    finish_report(out, &experiments::downsample_demo(&corpus)?)
}

fn parse_band(s: &str) -> Result<Band> {
    let (lo, hi) = s
        .split_once(':')
        .with_context(|| format!("band '{s}' must be LO:HI"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .with_context(|| format!("band '{s}' has a bad bound"))
    };
    Ok(Band {
        lo: parse(lo)?,
        hi: parse(hi)?,
    })
}

fn probe(
    out: &OutDir,
    ckpt: &Path,
    bands: &[String],
    alphas: &[f64],
    images: Option<&Path>,
) -> Result<()> {
    let state = load_checkpoint(ckpt)?;
    let cfg = RunConfig::from_checkpoint(&state)?;
    let mut trainer = Trainer::new(cfg.gan, vec![experiments::toy_target()])?;
    trainer.restore(&state)?;
    let images = match images {
        Some(dir) => images_only(dir)?,
        None => vec![experiments::toy_target()],
    };
    let bands = bands
        .iter()
        .map(|b| parse_band(b))
        .collect::<Result<Vec<_>>>()?;
    let mut report =
        experiments::probe_discriminator(&mut trainer.discriminator, &images, &bands, alphas)?;
    report.config.insert(
        0,
        (
            "checkpoint".into(),
            PathBuf::from(ckpt).display().to_string(),
        ),
    );
    finish_report(out, &report)
}
