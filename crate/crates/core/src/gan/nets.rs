//! Generator and discriminator for 16x16 single-channel images.

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor_nn::layers::{BatchNorm2d, Conv2d, Linear, Mode, SnLinear};
use crate::tensor_nn::{Binding, Graph, ParamStore, Scalar, Tensor, Var};

use super::config::{Architecture, NetWidths};

/// Side length of generated and discriminated images.
pub const IMAGE_SIZE: usize = 16;
const BASE_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum GenBlock {
    Compact {
        conv: Conv2d,
        bn: BatchNorm2d,
    },
    PreActivation {
        bn1: BatchNorm2d,
        conv1: Conv2d,
        bn2: BatchNorm2d,
        conv2: Conv2d,
    },
}

/// Latent vector to `[B, 1, 16, 16]` image in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Generator<T: Scalar> {
    pub store: ParamStore<T>,
    latent_dim: usize,
    width: usize,
    fc: Linear,
    blocks: Vec<GenBlock>,
    bn_out: BatchNorm2d,
    conv_out: Conv2d,
}

impl<T: Scalar> Generator<T> {
    pub fn new(
        arch: Architecture,
        latent_dim: usize,
        widths: NetWidths,
        rng: &mut SeededRng,
    ) -> Self {
        let width = widths.generator;
        let mut store = ParamStore::new();
        let fc = Linear::new(
            &mut store,
            "g.fc",
            latent_dim,
            width * BASE_SIZE * BASE_SIZE,
            rng,
        );
        let blocks = (0..2)
            .map(|i| {
                let name = format!("g.block{i}");
                match arch {
                    Architecture::Compact => GenBlock::Compact {
                        conv: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv"),
                            width,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                        bn: BatchNorm2d::new(&mut store, &format!("{name}.bn"), width),
                    },
                    Architecture::PreActivation => GenBlock::PreActivation {
                        bn1: BatchNorm2d::new(&mut store, &format!("{name}.bn1"), width),
                        conv1: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv1"),
                            width,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                        bn2: BatchNorm2d::new(&mut store, &format!("{name}.bn2"), width),
                        conv2: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv2"),
                            width,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                    },
                }
            })
            .collect();
        let bn_out = BatchNorm2d::new(&mut store, "g.bn_out", width);
        let conv_out = Conv2d::new(&mut store, "g.conv_out", width, 1, 3, 1, 1, rng);
        Generator {
            store,
            latent_dim,
            width,
            fc,
            blocks,
            bn_out,
            conv_out,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    /// `[B, latent]` node to `[B, 1, 16, 16]` node. Batch statistics are
    /// used and running statistics updated in [`Mode::Train`].
    pub fn forward(&mut self, g: &mut Graph<T>, b: &Binding, z: Var, mode: Mode) -> Result<Var> {
        let batch = match g.value(z).shape() {
            [n, d] if *d == self.latent_dim => *n,
            other => {
                return Err(Error::shape(format!(
                    "generator expects [B, {}] latents, got {other:?}",
                    self.latent_dim
                )))
            }
        };
        let store = &mut self.store;
        let h = self.fc.forward(g, b, z)?;
        let mut h = g.reshape(h, &[batch, self.width, BASE_SIZE, BASE_SIZE])?;
        for block in &self.blocks {
            let main = match block {
                GenBlock::Compact { conv, bn } => {
                    let x = conv.forward(g, b, h)?;
                    let x = bn.forward(g, b, store, x, mode)?;
                    let x = g.relu(x);
                    g.upsample2(x)?
                }
                GenBlock::PreActivation {
                    bn1,
                    conv1,
                    bn2,
                    conv2,
                } => {
                    let x = bn1.forward(g, b, store, h, mode)?;
                    let x = g.relu(x);
                    let x = conv1.forward(g, b, x)?;
                    let x = bn2.forward(g, b, store, x, mode)?;
                    let x = g.relu(x);
                    let x = g.upsample2(x)?;
                    conv2.forward(g, b, x)?
                }
            };
            let skip = g.upsample2(h)?;
            h = g.add(main, skip)?;
        }
        let h = self.bn_out.forward(g, b, store, h, mode)?;
        let h = g.relu(h);
        let h = self.conv_out.forward(g, b, h)?;
        Ok(g.tanh(h))
    }

    /// Images for a batch of latents, without gradients.
    pub fn generate(&mut self, z: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let b = self.store.bind(&mut g, false);
        let z = g.input(z.clone());
        let out = self.forward(&mut g, &b, z, mode)?;
        Ok(g.value(out).clone())
    }
}

#[derive(Debug, Clone)]
enum DiscBlock {
    Compact {
        conv: Conv2d,
        shortcut: Option<Conv2d>,
        downsample: bool,
    },
    PreActivation {
        conv1: Conv2d,
        conv2: Conv2d,
        shortcut: Option<Conv2d>,
        downsample: bool,
        leading_relu: bool,
    },
}

/// `[B, 1, 16, 16]` image to `[B, 1]` raw logit.
#[derive(Debug, Clone)]
pub struct Discriminator<T: Scalar> {
    pub store: ParamStore<T>,
    blocks: Vec<DiscBlock>,
    fc: SnLinear,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new(arch: Architecture, widths: NetWidths, rng: &mut SeededRng) -> Self {
        let width = widths.discriminator;
        let mut store = ParamStore::new();
        let blocks = (0..3)
            .map(|i| {
                let name = format!("d.block{i}");
                let cin = if i == 0 { 1 } else { width };
                let downsample = i < 2;
                let shortcut = (cin != width).then(|| {
                    Conv2d::new(
                        &mut store,
                        &format!("{name}.shortcut"),
                        cin,
                        width,
                        1,
                        1,
                        0,
                        rng,
                    )
                });
                match arch {
                    Architecture::Compact => DiscBlock::Compact {
                        conv: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv"),
                            cin,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                        shortcut,
                        downsample,
                    },
                    Architecture::PreActivation => DiscBlock::PreActivation {
                        conv1: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv1"),
                            cin,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                        conv2: Conv2d::new(
                            &mut store,
                            &format!("{name}.conv2"),
                            width,
                            width,
                            3,
                            1,
                            1,
                            rng,
                        ),
                        shortcut,
                        downsample,
                        leading_relu: i > 0,
                    },
                }
            })
            .collect();
        let fc = SnLinear::new(&mut store, "d.fc", width, 1, rng);
        Discriminator { store, blocks, fc }
    }

    /// Raw logits. In [`Mode::Train`] the spectral-norm power iteration
    /// advances one step.
    pub fn forward(&mut self, g: &mut Graph<T>, b: &Binding, x: Var, mode: Mode) -> Result<Var> {
        match g.value(x).shape() {
            [_, 1, h, w] if *h == IMAGE_SIZE && *w == IMAGE_SIZE => {}
            other => {
                return Err(Error::shape(format!(
                    "discriminator expects [B, 1, {IMAGE_SIZE}, {IMAGE_SIZE}] images, got {other:?}"
                )))
            }
        }
        let mut h = x;
        for block in &self.blocks {
            let (main, shortcut, downsample) = match block {
                DiscBlock::Compact {
                    conv,
                    shortcut,
                    downsample,
                } => {
                    let y = conv.forward(g, b, h)?;
                    (g.relu(y), shortcut, *downsample)
                }
                DiscBlock::PreActivation {
                    conv1,
                    conv2,
                    shortcut,
                    downsample,
                    leading_relu,
                } => {
                    let y = if *leading_relu { g.relu(h) } else { h };
                    let y = conv1.forward(g, b, y)?;
                    let y = g.relu(y);
                    (conv2.forward(g, b, y)?, shortcut, *downsample)
                }
            };
            let (main, mut skip) = if downsample {
                (g.avgpool2(main)?, g.avgpool2(h)?)
            } else {
                (main, h)
            };
            if let Some(conv) = shortcut {
                skip = conv.forward(g, b, skip)?;
            }
            h = g.add(main, skip)?;
        }
        let h = g.relu(h);
        let h = g.sum_pool(h)?;
        self.fc.forward(g, b, &mut self.store, h, mode)
    }

    /// `sigmoid(D(x))` per sample, without gradients.
    pub fn probabilities(&mut self, x: &Tensor<T>, mode: Mode) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let b = self.store.bind(&mut g, false);
        let x = g.input(x.clone());
        let logits = self.forward(&mut g, &b, x, mode)?;
        let p = g.sigmoid(logits);
        Ok(g.value(p).data().iter().map(|v| v.to_f64_lossy()).collect())
    }
}
