use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::realness::check_lambda;
use crate::tensor_nn::AdamConfig;

/// Which objective the training loop optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GanMode {
    /// Plain non-saturating GAN.
    Sgan,
    /// Spatial and spectral discriminator blended with `lambda`.
    #[default]
    Ssd,
    /// `Ssd` plus the spectral regularization term on the generator.
    SsdReg,
}

impl fmt::Display for GanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GanMode::Sgan => "sgan",
            GanMode::Ssd => "ssd",
            GanMode::SsdReg => "ssd_reg",
        })
    }
}

impl FromStr for GanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgan" => Ok(GanMode::Sgan),
            "ssd" => Ok(GanMode::Ssd),
            "ssd_reg" | "ssd-reg" => Ok(GanMode::SsdReg),
            other => Err(Error::invalid(format!(
                "unknown mode '{other}' (expected sgan, ssd or ssd_reg)"
            ))),
        }
    }
}

/// Residual block wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Architecture {
    /// One convolution per block, laid out exactly like the layer tables.
    #[default]
    Compact,
    /// Two convolutions per block with activations ahead of each convolution.
    PreActivation,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Compact => "compact",
            Architecture::PreActivation => "preact",
        })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "compact" => Ok(Architecture::Compact),
            "preact" => Ok(Architecture::PreActivation),
            other => Err(Error::invalid(format!(
                "unknown architecture '{other}' (expected compact or preact)"
            ))),
        }
    }
}

/// Channel widths of the two networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetWidths {
    pub generator: usize,
    pub discriminator: usize,
}

impl Default for NetWidths {
    fn default() -> Self {
        NetWidths {
            generator: 64,
            discriminator: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanConfig {
    pub mode: GanMode,
    pub lambda: f64,
    pub adam: AdamConfig,
    pub iterations: u64,
    pub batch_size: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub w_reg: f64,
    pub log_every: u64,
    pub eval_batch: usize,
    pub arch: Architecture,
    pub widths: NetWidths,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            mode: GanMode::Ssd,
            lambda: 0.5,
            adam: AdamConfig::default(),
            iterations: 10_000,
            batch_size: 8,
            latent_dim: 8,
            seed: 0,
            w_reg: 1.0,
            log_every: 500,
            eval_batch: 64,
            arch: Architecture::Compact,
            widths: NetWidths::default(),
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        let positive = [
            ("batch_size", self.batch_size),
            ("latent_dim", self.latent_dim),
            ("eval_batch", self.eval_batch),
            ("generator width", self.widths.generator),
            ("discriminator width", self.widths.discriminator),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.log_every == 0 {
            return Err(Error::invalid("log_every must be positive"));
        }
        let a = &self.adam;
        if !(a.lr > 0.0 && a.lr.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                a.lr
            )));
        }
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.w_reg >= 0.0 && self.w_reg.is_finite()) {
            return Err(Error::invalid("w_reg must be a nonnegative number"));
        }
        Ok(())
    }

    /// Whether the spectral classifier takes part in training. At
    /// `lambda = 1` its output is multiplied by zero, so it is skipped.
    pub fn uses_classifier(&self) -> bool {
        self.mode != GanMode::Sgan && self.lambda < 1.0
    }

    /// Blend weight actually applied to the spatial term.
    pub fn effective_lambda(&self) -> f64 {
        if self.mode == GanMode::Sgan {
            1.0
        } else {
            self.lambda
        }
    }
}
