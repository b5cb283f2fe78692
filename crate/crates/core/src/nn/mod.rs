//! Minimal dense-network substrate: parameter storage, dense layers with
//! explicit forward/backward, spherical harmonics, Adam, and a
//! finite-difference gradient checker.

mod adam;
mod dense;
pub mod gradcheck;
mod params;
mod sh;

pub use adam::AdamConfig;
pub use dense::{activate, Activation, DenseCache, DenseLayer};
pub use params::{GradBuffer, ParamId, ParameterStore, Params};
pub use sh::{sh_encode, sh_encode_into, SH_COMPONENTS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnError {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("backward called without a cached forward pass ({0})")]
    MissingForwardCache(&'static str),
}
