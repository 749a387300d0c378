//! Spectral realness toolkit and a small GAN laboratory.
//!
//! * [`tensor_nn`]: tensors, layers, reverse-mode gradients, Adam.
//! * [`spectral`]: DFT, azimuthal averaging and the reduced spectrum `phi`.
//! * [`realness`]: the spectral classifier and blended realness score.
//! * [`gan`]: generator/discriminator, losses and the alternating trainer.
//! * [`experiments`]: toy checkerboard, downsampling demo, band probe, lambda sweep.
//! * [`io`]: PGM/PPM images, checkpoints, run configuration and CSV output.

pub mod error;
pub mod experiments;
pub mod gan;
pub mod image;
pub mod io;
pub mod par;
pub mod realness;
pub mod rng;
pub mod spectral;
pub mod tensor_nn;

pub use error::{Error, Result};
pub use image::Image;
