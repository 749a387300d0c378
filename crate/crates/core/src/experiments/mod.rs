//! Desk-scale diagnostic experiments: the checkerboard toy comparison, the
//! lambda sweep, the downsampling demonstration and the discriminator band
//! probe. Each produces an [`ExperimentReport`] that can be written to a
//! directory.

mod demo;
mod filters;
mod probe;
mod report;
mod toy;

pub use demo::{demo_gaps, downsample_demo, standard_corpus, DemoGaps, CORPUS_NOISE, CORPUS_SIZES};
pub use filters::{
    add_noise, avgpool2, gaussian_blur, high_band_energy, make_checkerboard, make_ramp, sharpen,
    sharpen_unclamped,
};
pub use probe::{probe_discriminator, Band};
pub use report::{Cell, ExperimentReport};
pub use toy::{
    lambda_sweep, run_toy, run_toys, runs_report, sweep_configs, toy_configs, toy_experiment,
    toy_target, ToyRun,
};
