//! Perceptual binding of multi-object binary images by reconstruction
//! clustering (RC): an EM-like loop that groups pixels by which cluster's
//! denoising-autoencoder reconstruction explains them best.

pub mod cli;
pub mod config;
pub mod dae;
pub mod datasets;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod rc;
pub mod render;
pub mod search;

pub use error::{Error, Result};
