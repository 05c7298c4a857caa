//! Desk-scale workbench for single-image relighting experiments.
//!
//! The crate generates synthetic relighting videos (static scene, moving
//! point light) with a built-in CPU renderer, encodes the per-frame 5D
//! lighting control signal, trains and samples a toy controllable video
//! denoiser, and scores results with image-space metrics.

pub mod aabb;
pub mod campaign;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod image;
pub mod lightfield;
pub mod math;
pub mod mesh;
pub mod render;
pub mod scene;
pub mod seed;

pub use error::{Error, Result};
