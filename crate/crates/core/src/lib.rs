//! Neural signed-distance surface reconstruction with spatially-adaptive
//! multi-resolution hash encodings.
//!
//! A learned per-level mask field `s(x) ∈ (0,1)^L` scales each level of a
//! multi-resolution hash grid before the features reach the SDF network. The
//! SDF is trained through NeuS-style volume rendering, with numerical
//! (central-difference) normals, eikonal and curvature regularization, and
//! progressive unveiling of the finer grid levels.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, threading and
//! the command line live in the companion `adaptive-hash` crate.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chamfer;
pub mod config;
mod error;
pub mod exec;
pub mod hash_grid;
pub mod mask;
pub mod math;
pub mod mesh;
pub mod model;
pub mod nn;
pub mod radiance;
pub mod real;
pub mod render;
pub mod scene;
pub mod sdf;
pub mod training;

pub use config::{ModelConfig, TrainConfig};
pub use error::{Error, Result};
pub use model::NeuralSurface;
pub use nn::{GradBuffer, ParamId, ParameterStore, Params};
pub use real::Real;
