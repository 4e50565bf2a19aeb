//! Builds the nine task datasets from an embedding-annotated source manifest.
//! Media stay opaque references; every transformation is recorded in the
//! item provenance.

mod align;
pub mod fixtures;
mod builders;
mod sample;
mod setting;
mod tables;

pub use align::{alignment_filter, AlignmentDecision, ALIGNMENT_THRESHOLD};
pub use builders::{
    build_cat, build_cot_stitch, build_cot_swap, build_icit, build_mait, build_mcit, build_mat, build_mvit,
    build_mvt, build_task, BuildOptions, COT_QUESTION,
};
pub use sample::{validate_manifest, EventAnnotation, SourceQa, SourceSample};
pub use setting::{render_built, render_setting, INSTRUCTION_SENTENCE};
pub use tables::{LookupTables, PrefixRule};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evalharness::{QAItem, Setting};
use crate::TaskKind;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },
    #[error("lookup tables: {0}")]
    InvalidTables(String),
}

pub type Result<T> = core::result::Result<T, BuildError>;

/// Machine-readable reasons a sample produced no item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    MissingQa,
    ExhaustedBucket,
    InsufficientPool,
    NoDonor,
    NoPartner,
    SameClass,
    RelatedPair,
    SameBucket,
    MissingAttribute,
    DegeneratePermutation,
    NotDualModality,
    UnknownCategory,
    MissingEmbedding,
    LowAlignment,
}

impl SkipReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::MissingQa => "missing_qa",
            Self::ExhaustedBucket => "exhausted_bucket",
            Self::InsufficientPool => "insufficient_pool",
            Self::NoDonor => "no_donor",
            Self::NoPartner => "no_partner",
            Self::SameClass => "same_class",
            Self::RelatedPair => "related_pair",
            Self::SameBucket => "same_bucket",
            Self::MissingAttribute => "missing_attribute",
            Self::DegeneratePermutation => "degenerate_permutation",
            Self::NotDualModality => "not_dual_modality",
            Self::UnknownCategory => "unknown_category",
            Self::MissingEmbedding => "missing_embedding",
            Self::LowAlignment => "low_alignment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub task: TaskKind,
    pub sample_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partner_id: Option<String>,
    pub reason: SkipReason,
}

/// One media track segment: a source clip, or a deleted modality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Source { sample_id: String, media_ref: String },
    Tombstone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaTracks {
    pub visual: Vec<Segment>,
    pub audio: Vec<Segment>,
}

impl MediaTracks {
    /// Exchanges the order of the audio segments; applying it twice is the identity.
    pub fn swap_audio(&mut self) {
        self.audio.reverse();
    }
}

/// How each choice was produced, aligned with the item's choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChoiceRole {
    /// The keyed answer.
    Key,
    /// The original answer, shown but not keyed.
    Original,
    /// An original or table-drawn option that is not the answer.
    Pool,
    /// Same-supercategory replacement for the removed answer.
    Substitute,
    /// Class unrelated to the question.
    Unrelated,
    /// Reversed event order.
    Order,
    Simultaneous,
    /// Same words as the key with the attributes exchanged.
    Permutation,
    /// Appended "None of the above".
    Refusal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<String>,
    pub transformer: TaskKind,
    pub substituted: Vec<String>,
    pub setting: Setting,
    pub media: MediaTracks,
    pub choice_roles: Vec<ChoiceRole>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltItem {
    pub item: QAItem,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub counts: BTreeMap<TaskKind, usize>,
    pub skip_reasons: BTreeMap<SkipReason, usize>,
    pub skipped: Vec<Skip>,
}

impl BuildReport {
    pub fn record(&mut self, task: TaskKind, built: usize, skips: &[Skip]) {
        *self.counts.entry(task).or_default() += built;
        for s in skips {
            *self.skip_reasons.entry(s.reason).or_default() += 1;
        }
        self.skipped.extend_from_slice(skips);
    }
}

/// Builds every requested task in order and renders it in `setting`.
pub fn build_all(
    manifest: &[SourceSample],
    tables: &LookupTables,
    tasks: &[TaskKind],
    setting: Setting,
    opts: &BuildOptions,
) -> Result<(BTreeMap<TaskKind, Vec<BuiltItem>>, BuildReport)> {
    validate_manifest(manifest)?;
    tables.validate(manifest)?;
    let mut out = BTreeMap::new();
    let mut report = BuildReport::default();
    for &task in tasks {
        let (items, skips) = build_task(task, manifest, tables, opts);
        report.record(task, items.len(), &skips);
        out.insert(task, items.into_iter().map(|b| render_built(b, setting)).collect());
    }
    Ok((out, report))
}
