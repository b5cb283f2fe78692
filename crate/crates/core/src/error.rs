use alloc::string::String;

use thiserror::Error;

use crate::hash_grid::GridError;
use crate::nn::NnError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("length mismatch in {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("backward called without a cached forward pass ({0})")]
    MissingCache(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
    #[error("training diverged: {0}")]
    Divergence(String),
}

pub type Result<T> = core::result::Result<T, Error>;
