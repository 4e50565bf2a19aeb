use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{SkipReason, SourceSample};
use crate::numeric::unit_similarity;

pub const ALIGNMENT_THRESHOLD: f64 = 0.70;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentDecision {
    pub sample_id: String,
    /// Visual embedding against the class-label embedding, in [0, 1].
    pub visual_label: f64,
    /// Class-label embedding against the audio embedding, in [0, 1].
    pub label_audio: f64,
    pub score: f64,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<SkipReason>,
}

/// Product of the two label-bridged similarities, each mapped through
/// `(1 + cos) / 2`; accepted when the product reaches the threshold.
pub fn alignment_filter(s: &SourceSample) -> AlignmentDecision {
    let empty = [&s.visual_embedding, &s.label_embedding, &s.audio_embedding]
        .iter()
        .any(|v| v.is_empty() || v.iter().all(|x| *x == 0.0));
    if empty {
        return AlignmentDecision {
            sample_id: s.id.clone(),
            visual_label: 0.0,
            label_audio: 0.0,
            score: 0.0,
            accepted: false,
            reason: Some(SkipReason::MissingEmbedding),
        };
    }
    let visual_label = unit_similarity(&s.visual_embedding, &s.label_embedding);
    let label_audio = unit_similarity(&s.label_embedding, &s.audio_embedding);
    let score = visual_label * label_audio;
    let accepted = score >= ALIGNMENT_THRESHOLD;
    AlignmentDecision {
        sample_id: s.id.clone(),
        visual_label,
        label_audio,
        score,
        accepted,
        reason: (!accepted).then_some(SkipReason::LowAlignment),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn sample(v: Vec<f64>, l: Vec<f64>, a: Vec<f64>) -> SourceSample {
        SourceSample {
            id: "s".into(),
            media_ref: "m".into(),
            visual_embedding: v,
            audio_embedding: a,
            label_embedding: l,
            class_label: "c".into(),
            supercategory: "k".into(),
            question_category: String::new(),
            source_qa: None,
            event: None,
            requires_both: false,
        }
    }

    #[test]
    fn identical_and_orthogonal() {
        let d = alignment_filter(&sample(vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]));
        assert!((d.score - 1.0).abs() < 1e-12 && d.accepted);
        let d = alignment_filter(&sample(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]));
        assert!((d.visual_label - 0.5).abs() < 1e-12);
        assert!(!d.accepted);
        assert_eq!(d.reason, Some(SkipReason::LowAlignment));
        let d = alignment_filter(&sample(vec![], vec![1.0], vec![1.0]));
        assert_eq!(d.reason, Some(SkipReason::MissingEmbedding));
    }

    proptest! {
        #[test]
        fn monotone_in_each_component(l in proptest::collection::vec(-1.0f64..1.0, 3), t in 0.0f64..1.0) {
            prop_assume!(l.iter().any(|x| x.abs() > 1e-3));
            // Moving the visual embedding toward the label never lowers the score.
            let far: Vec<f64> = l.iter().map(|x| -x + 0.3).collect();
            let near: Vec<f64> = far.iter().zip(&l).map(|(f, x)| f + t * (x - f)).collect();
            prop_assume!(near.iter().any(|x| x.abs() > 1e-6) && far.iter().any(|x| x.abs() > 1e-6));
            let a = l.clone();
            let lo = alignment_filter(&sample(far, l.clone(), a.clone()));
            let hi = alignment_filter(&sample(near, l.clone(), a));
            prop_assert_eq!(lo.label_audio, hi.label_audio);
            prop_assert!(hi.visual_label >= lo.visual_label - 1e-12);
            prop_assert!(hi.score >= lo.score - 1e-12);
            prop_assert!(!lo.accepted || hi.accepted);
        }
    }
}
