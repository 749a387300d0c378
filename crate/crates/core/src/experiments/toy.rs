use crate::error::{Error, Result};
use crate::gan::{metrics_csv, GanConfig, GanMode, StepMetrics, Trainer, IMAGE_SIZE};
use crate::image::Image;
use crate::io::{sample_grid, RunConfig};
use crate::par::{self, Execution};
use crate::realness::check_lambda;
use crate::tensor_nn::Tensor;

use super::filters::make_checkerboard;
use super::report::{Cell, ExperimentReport};

/// Columns of the sample grid written per run.
const GRID_COLS: usize = 8;

/// The 16x16 checkerboard every toy run learns.
pub fn toy_target() -> Image {
    make_checkerboard(IMAGE_SIZE).expect("even size")
}

/// Outcome of one training run on the toy target.
#[derive(Debug, Clone)]
pub struct ToyRun {
    pub config: GanConfig,
    /// Metrics of a final evaluation after the last step.
    pub final_metrics: StepMetrics,
    pub reconstruction_error: f64,
    pub history: Vec<StepMetrics>,
    pub samples: Tensor<f32>,
    pub trainer: Trainer,
}

impl ToyRun {
    pub fn spectral_discrepancy(&self) -> f64 {
        self.final_metrics.spectral_discrepancy as f64
    }

    /// File stem such as `ssd_lambda0.5_seed3`.
    pub fn label(&self) -> String {
        format!(
            "{}_lambda{:?}_seed{}",
            self.config.mode, self.config.lambda, self.config.seed
        )
    }
}

/// Trains one configuration on [`toy_target`] to completion.
pub fn run_toy(config: GanConfig) -> Result<ToyRun> {
    let mut trainer = Trainer::new(config.clone(), vec![toy_target()])?;
    trainer.run(|_| Ok(()))?;
    let eval = trainer.evaluate()?;
    Ok(ToyRun {
        reconstruction_error: trainer.reconstruction_error()?,
        final_metrics: eval.metrics,
        history: trainer.history().to_vec(),
        samples: eval.samples,
        trainer,
        config,
    })
}

/// Runs independent configurations, possibly in parallel, in input order.
pub fn run_toys(exec: Execution, configs: &[GanConfig]) -> Result<Vec<ToyRun>> {
    par::map(exec, configs, |c| run_toy(c.clone()))
        .into_iter()
        .collect()
}

fn seeds(config: &RunConfig) -> impl Iterator<Item = u64> + '_ {
    (0..config.seeds as u64).map(move |i| config.gan.seed + i)
}

/// The spectral mode compared against the plain baseline.
fn spectral_mode(config: &RunConfig) -> GanMode {
    match config.gan.mode {
        GanMode::Sgan => GanMode::Ssd,
        m => m,
    }
}

/// Per seed: a plain run and a spectral run at `config.gan.lambda`.
pub fn toy_configs(config: &RunConfig) -> Vec<GanConfig> {
    let mut out = Vec::new();
    for seed in seeds(config) {
        out.push(GanConfig {
            mode: GanMode::Sgan,
            lambda: 1.0,
            seed,
            ..config.gan.clone()
        });
        out.push(GanConfig {
            mode: spectral_mode(config),
            seed,
            ..config.gan.clone()
        });
    }
    out
}

/// Per lambda and seed, a spectral run at that lambda.
pub fn sweep_configs(config: &RunConfig) -> Result<Vec<GanConfig>> {
    for &l in &config.lambdas {
        check_lambda(l)?;
    }
    if !config.lambdas.contains(&1.0) {
        return Err(Error::invalid(
            "the lambda sweep needs lambda = 1.0 as its control",
        ));
    }
    let mut out = Vec::new();
    for &lambda in &config.lambdas {
        for seed in seeds(config) {
            out.push(GanConfig {
                mode: spectral_mode(config),
                lambda,
                seed,
                ..config.gan.clone()
            });
        }
    }
    Ok(out)
}

/// Report with one row per run plus each run's metric history and sample
/// grid.
pub fn runs_report(name: &str, config: &RunConfig, runs: &[ToyRun]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(
        name,
        &[
            "mode",
            "lambda",
            "seed",
            "spectral_discrepancy",
            "reconstruction_error",
            "d_loss",
            "g_loss",
        ],
    );
    for line in config.to_text().lines() {
        if let Some((k, v)) = line.split_once('=') {
            report.config.push((k.to_string(), v.to_string()));
        }
    }
    for run in runs {
        let m = &run.final_metrics;
        report.push_row(vec![
            run.config.mode.to_string().into(),
            run.config.lambda.into(),
            run.config.seed.into(),
            Cell::Float(m.spectral_discrepancy as f64),
            run.reconstruction_error.into(),
            Cell::Float(m.d_loss as f64),
            Cell::Float(m.g_loss as f64),
        ])?;
        let label = run.label();
        report
            .tables
            .push((format!("metrics_{label}.csv"), metrics_csv(&run.history)));
        let rows = run.samples.shape()[0].div_ceil(GRID_COLS);
        report.images.push((
            format!("samples_{label}.pgm"),
            sample_grid(&run.samples, GRID_COLS, rows)?,
        ));
    }
    Ok(report)
}

/// Plain versus spectral training on the checkerboard, `config.seeds` seeds
/// starting at `config.gan.seed`.
pub fn toy_experiment(
    config: &RunConfig,
    exec: Execution,
) -> Result<(ExperimentReport, Vec<ToyRun>)> {
    config.validate()?;
    let runs = run_toys(exec, &toy_configs(config))?;
    Ok((runs_report("toy_experiment", config, &runs)?, runs))
}

/// Spectral training for every `config.lambdas` value and seed.
pub fn lambda_sweep(
    config: &RunConfig,
    exec: Execution,
) -> Result<(ExperimentReport, Vec<ToyRun>)> {
    config.validate()?;
    let runs = run_toys(exec, &sweep_configs(config)?)?;
    Ok((runs_report("lambda_sweep", config, &runs)?, runs))
}
