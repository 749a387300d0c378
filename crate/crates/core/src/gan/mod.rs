//! Generator, discriminator, adversarial objectives and the training loop.

mod config;
mod losses;
mod nets;
mod train;

pub use config::{Architecture, GanConfig, GanMode, NetWidths};
pub use losses::{
    blended_log_prob, classifier_probs, d_loss_sgan, d_loss_ssd, discriminator_loss, g_loss_sgan,
    g_loss_ssd, generator_loss,
};
pub use nets::{Discriminator, Generator, IMAGE_SIZE};
pub use train::{
    metrics_csv, phi_of_batch, sample_latent, spectral_discrepancy, train, Evaluation, StepLosses,
    StepMetrics, Trainer, METRICS_HEADER,
};
