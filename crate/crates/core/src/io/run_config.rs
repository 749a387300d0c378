//! Flat `key=value` configuration mirroring [`GanConfig`] plus experiment
//! selections.

use std::path::Path;

use crate::error::{Error, Result};
use crate::gan::{GanConfig, Trainer};
use crate::tensor_nn::Tensor;

use super::files::write_atomic;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub gan: GanConfig,
    /// Number of seeds per experiment cell, starting at `gan.seed`.
    pub seeds: usize,
    /// Blend weights visited by the lambda sweep.
    pub lambdas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gan: GanConfig::default(),
            seeds: 5,
            lambdas: vec![0.3, 0.5, 0.7, 1.0],
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse '{value}' for key '{key}'")))
}

impl RunConfig {
    pub const KEYS: [&'static str; 17] = [
        "mode",
        "lambda",
        "lr",
        "beta1",
        "beta2",
        "iterations",
        "batch_size",
        "latent_dim",
        "seed",
        "w_reg",
        "log_every",
        "eval_batch",
        "arch",
        "g_width",
        "d_width",
        "seeds",
        "lambdas",
    ];

    /// Overrides one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let g = &mut self.gan;
        match key {
            "mode" => g.mode = value.trim().parse()?,
            "lambda" => g.lambda = parse(key, value)?,
            "lr" => g.adam.lr = parse(key, value)?,
            "beta1" => g.adam.beta1 = parse(key, value)?,
            "beta2" => g.adam.beta2 = parse(key, value)?,
            "iterations" => g.iterations = parse(key, value)?,
            "batch_size" => g.batch_size = parse(key, value)?,
            "latent_dim" => g.latent_dim = parse(key, value)?,
            "seed" => g.seed = parse(key, value)?,
            "w_reg" => g.w_reg = parse(key, value)?,
            "log_every" => g.log_every = parse(key, value)?,
            "eval_batch" => g.eval_batch = parse(key, value)?,
            "arch" => g.arch = value.trim().parse()?,
            "g_width" => g.widths.generator = parse(key, value)?,
            "d_width" => g.widths.discriminator = parse(key, value)?,
            "seeds" => self.seeds = parse(key, value)?,
            "lambdas" => {
                self.lambdas = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            other => {
                return Err(Error::invalid(format!(
                    "unknown configuration key '{other}'"
                )))
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let g = &self.gan;
        Some(match key {
            "mode" => g.mode.to_string(),
            "lambda" => format!("{:?}", g.lambda),
            "lr" => format!("{:?}", g.adam.lr),
            "beta1" => format!("{:?}", g.adam.beta1),
            "beta2" => format!("{:?}", g.adam.beta2),
            "iterations" => g.iterations.to_string(),
            "batch_size" => g.batch_size.to_string(),
            "latent_dim" => g.latent_dim.to_string(),
            "seed" => g.seed.to_string(),
            "w_reg" => format!("{:?}", g.w_reg),
            "log_every" => g.log_every.to_string(),
            "eval_batch" => g.eval_batch.to_string(),
            "arch" => g.arch.to_string(),
            "g_width" => g.widths.generator.to_string(),
            "d_width" => g.widths.discriminator.to_string(),
            "seeds" => self.seeds.to_string(),
            "lambdas" => self
                .lambdas
                .iter()
                .map(|l| format!("{l:?}"))
                .collect::<Vec<_>>()
                .join(","),
            _ => return None,
        })
    }

    /// Defaults overridden by `text`. Blank lines and `#` comments are
    /// ignored; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key=value", n + 1))
            })?;
            cfg.set(key.trim(), value)
                .map_err(|e| Error::invalid(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    /// Every key in a fixed order, one `key=value` per line.
    pub fn to_text(&self) -> String {
        Self::KEYS
            .iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.gan.validate()?;
        if self.seeds == 0 {
            return Err(Error::invalid("seeds must be positive"));
        }
        for &l in &self.lambdas {
            crate::realness::check_lambda(l)?;
        }
        Ok(())
    }

    /// Defaults overridden by the settings recorded in a training
    /// checkpoint.
    pub fn from_checkpoint(state: &[(String, Tensor<f32>)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (k, v) in Trainer::state_settings(state)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}
