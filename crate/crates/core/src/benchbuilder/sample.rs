use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BuildError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceQa {
    pub question: String,
    pub answer: String,
    /// Original answer options, when the source dataset has them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub options: Vec<String>,
}

/// Subject and attribute of a single sound event, e.g. ("crowd", "cheers").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub subject: String,
    pub attribute: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSample {
    pub id: String,
    pub media_ref: String,
    pub visual_embedding: Vec<f64>,
    pub audio_embedding: Vec<f64>,
    pub label_embedding: Vec<f64>,
    pub class_label: String,
    pub supercategory: String,
    #[serde(default)]
    pub question_category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_qa: Option<SourceQa>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<EventAnnotation>,
    /// The question needs both modalities to be answered.
    #[serde(default)]
    pub requires_both: bool,
}

/// Shared embedding dimension, unique ids, non-empty class labels, finite values.
pub fn validate_manifest(manifest: &[SourceSample]) -> Result<()> {
    let dim = manifest.iter().map(|s| s.visual_embedding.len()).find(|d| *d > 0);
    let mut ids: Vec<&str> = Vec::with_capacity(manifest.len());
    for s in manifest {
        let bad = |reason: String| BuildError::InvalidSample {
            id: s.id.clone(),
            reason,
        };
        if s.id.is_empty() {
            return Err(bad("empty id".into()));
        }
        if s.class_label.trim().is_empty() {
            return Err(bad("empty class_label".into()));
        }
        for (name, v) in [
            ("visual_embedding", &s.visual_embedding),
            ("audio_embedding", &s.audio_embedding),
            ("label_embedding", &s.label_embedding),
        ] {
            if let Some(d) = dim {
                if !v.is_empty() && v.len() != d {
                    return Err(bad(format!("{name} has dimension {}, manifest uses {d}", v.len())));
                }
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(bad(format!("{name} has a non-finite entry")));
            }
        }
        ids.push(&s.id);
    }
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(BuildError::InvalidSample {
            id: w[0].into(),
            reason: "duplicate id".into(),
        });
    }
    Ok(())
}
