//! The calibrated robust preference objective.
//!
//! Per-pair losses are log-sigmoids of β-scaled log-ratio gaps: one text term
//! comparing the winning and losing responses, and two anchor terms comparing
//! the winning response under correct versus corrupted visual or audio
//! conditioning. Each family is aggregated with a KL-robust log-sum-exp and
//! the anchors are switched on per task kind.

mod calibrate;
mod loss;
mod objective;
mod oracle;
mod record;
mod robust;

pub use calibrate::{
    calibrate_beta, BatchBetas, BetaCalibrator, ConstantSimilarity, CosineSimilarity, SimItem,
    SimilarityProvider, TextPairing,
};
pub use loss::{
    audio_anchor_loss, dpo_identity, pair_preference_loss, visual_anchor_loss, LogRatioPair,
};
pub use objective::{
    cavpref_objective, evaluate_with_betas, ComparisonTerm, Components, ObjectiveValue,
};
pub use oracle::{dro_oracle, DroSolution, MAX_ORACLE_SUPPORT};
pub use record::{
    Component, Conditioning, ConditionalPolicy, PolicyPair, PreferenceRecord, Side,
};
pub use robust::{robust_aggregate, robust_aggregate_with_grad, RobustConfig, Tilt};

use alloc::string::String;

use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrefError {
    #[error("non-finite value in `{field}`: {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("beta {0} outside [0.1, 1.0]")]
    BetaOutOfRange(f64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("record `{record}` ({kind}) is missing its losing {modality} conditioning")]
    MissingModality {
        record: String,
        kind: TaskKind,
        modality: &'static str,
    },
    #[error("record `{record}` ({kind}) carries a losing {modality} vector its task kind does not use")]
    UnexpectedModality {
        record: String,
        kind: TaskKind,
        modality: &'static str,
    },
    #[error("record `{record}`: winning and losing responses are identical")]
    IdenticalResponses { record: String },
    #[error("record `{record}`: `{field}` has dimension {got}, expected {expected}")]
    DimensionMismatch {
        record: String,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("length mismatch: {left} winning scores vs {right} losing scores")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("oracle support size {0} exceeds the brute-force limit")]
    SupportTooLarge(usize),
    #[error("invalid base distribution: {0}")]
    InvalidBase(&'static str),
    #[error("policy evaluation failed: {0}")]
    Policy(String),
}

pub type Result<T> = core::result::Result<T, PrefError>;

pub(crate) fn finite(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PrefError::NonFinite { field, value })
    }
}

/// Accepts β in `[0.1, 1.0]` with a few ulps of slack for values produced by `g`.
pub(crate) fn check_beta(beta: f64) -> Result<f64> {
    finite("beta", beta)?;
    if !(0.1 - 1e-12..=1.0 + 1e-12).contains(&beta) {
        return Err(PrefError::BetaOutOfRange(beta));
    }
    Ok(beta)
}
