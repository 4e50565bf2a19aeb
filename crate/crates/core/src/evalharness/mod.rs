//! Multiple-choice evaluation: two-stage answer extraction, CircularEval with
//! early exit, and per-category accuracy tables.

mod circular;
mod extract;
pub mod fixtures;
mod heuristic;
mod item;
mod refusal;
mod report;

pub use circular::{
    circular_eval, rotate, ConstantResponder, PassRecord, PerfectOracle, Responder, ResponderRequest,
    ScriptedResponder, CircularVerdict,
};
pub use extract::{
    extract, fallback_extract, render_extraction_prompt, ChoiceExtractor, EchoExtractor, ExtractionRequest,
    LexicalExtractor, RetryPolicy, NO_MATCH,
};
pub use heuristic::heuristic_match;
pub use item::{label_at, Choice, QAItem, Setting, NONE_OF_THE_ABOVE};
pub use refusal::{canonical_refusal, RefusalKind};
pub use report::{aggregate_accuracy, AccuracyReport, AccuracyRow, EvalMode, ALL_CATEGORIES, UNCATEGORIZED};

use alloc::string::String;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("item {id}: {reason}")]
    InvalidItem { id: String, reason: String },
    #[error("verdict refers to unknown item {0}")]
    UnknownItem(String),
    #[error("transport: {0}")]
    Transport(String),
}

pub type Result<T> = core::result::Result<T, EvalError>;

/// Outcome of answer extraction for one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Verdict {
    Matched(char),
    /// The response is a refusal and the item offers no explicit refusal option.
    Refusal(RefusalKind),
    NoMatch,
    NeedsStage2,
    /// The extractor could not be reached.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Heuristic,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub verdict: Verdict,
    pub stage: Stage,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl ExtractionResult {
    pub(crate) fn new(verdict: Verdict, stage: Stage, raw: &str) -> Self {
        Self {
            verdict,
            stage,
            raw_response: raw.into(),
            diagnostic: None,
        }
    }

    pub(crate) fn with_diagnostic(mut self, d: impl Into<String>) -> Self {
        self.diagnostic = Some(d.into());
        self
    }

    /// Whether this verdict answers `item` correctly.
    pub fn is_correct(&self, item: &QAItem) -> bool {
        match (&self.verdict, item.correct_label) {
            (Verdict::Matched(l), Some(c)) => *l == c,
            (Verdict::Refusal(_), None) => true,
            _ => false,
        }
    }
}
