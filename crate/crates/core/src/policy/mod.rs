//! Toy conditional token policy with exact log-probabilities and analytic
//! gradients, plus the frozen-reference trainer built on it.

mod fdcheck;
mod gradient;
mod model;
mod optim;
pub mod synthetic;
mod tail;
mod train;

pub use fdcheck::{check_gradient, finite_diff_check, FdReport, FD_SUBSET_LIMIT};
pub use gradient::{cavpref_gradient, gradient_with_betas, Gradient};
pub use model::{ModelDims, PolicyModel};
pub use optim::{Adam, AdamConfig};
pub use tail::{tail_experiment, TailReport, TailRow, TailSpec};
pub use train::{evaluate_margins, train, MarginReport, StepMetrics, TrainConfig, TrainState};

use alloc::string::String;

use crate::prefcore::PrefError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("token {token} at {field} position {position} is outside the vocabulary of {vocab}")]
    OutOfVocab {
        field: &'static str,
        token: u32,
        position: usize,
        vocab: usize,
    },
    #[error("{field} has dimension {got}, expected {expected}")]
    Dimension {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid model dimensions: {0}")]
    InvalidDims(String),
    #[error("invalid hyperparameter: {0}")]
    InvalidHyper(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error(transparent)]
    Pref(#[from] PrefError),
}

pub type Result<T> = core::result::Result<T, PolicyError>;
