//! Persistence: PGM/PPM images, checkpoints, flat key=value run
//! configuration and CSV output. Every write goes through [`write_atomic`].

mod checkpoint;
mod files;
mod pnm;
mod run_config;
mod tables;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION,
};
pub use files::{list_images, read_images, write_atomic};
pub use pnm::{decode_pnm, encode_pnm, read_image, write_image};
pub use run_config::RunConfig;
pub use tables::{grid_csv, log_magnitude_image, phi_csv, sample_grid};
