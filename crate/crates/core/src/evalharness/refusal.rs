use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::TaskKind;

/// Acceptable answers for questions that have no correct listed choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefusalKind {
    NoneOfTheAbove,
    IrrelevantChoices,
    Mismatched,
    AudioMissing,
    VideoMissing,
    CannotAnswer,
}

const VARIANTS: &[(&str, RefusalKind)] = &[
    ("none of the above", RefusalKind::NoneOfTheAbove),
    ("none of these", RefusalKind::NoneOfTheAbove),
    ("none of the options", RefusalKind::NoneOfTheAbove),
    ("no option is correct", RefusalKind::NoneOfTheAbove),
    ("no correct option", RefusalKind::NoneOfTheAbove),
    ("provided options are incorrect", RefusalKind::NoneOfTheAbove),
    ("options are incorrect", RefusalKind::NoneOfTheAbove),
    ("choices are irrelevant", RefusalKind::IrrelevantChoices),
    ("options are irrelevant", RefusalKind::IrrelevantChoices),
    ("irrelevant options", RefusalKind::IrrelevantChoices),
    ("video and question are mismatched", RefusalKind::Mismatched),
    ("audio and question are mismatched", RefusalKind::Mismatched),
    ("is incompatible with the question", RefusalKind::Mismatched),
    ("visual audio is incompatible", RefusalKind::Mismatched),
    ("visual is incompatible", RefusalKind::Mismatched),
    ("audio is incompatible", RefusalKind::Mismatched),
    ("audio is missing", RefusalKind::AudioMissing),
    ("there is no audio", RefusalKind::AudioMissing),
    ("video is missing", RefusalKind::VideoMissing),
    ("there is no video", RefusalKind::VideoMissing),
    ("i cannot answer", RefusalKind::CannotAnswer),
    ("i can not answer", RefusalKind::CannotAnswer),
    ("i can t answer", RefusalKind::CannotAnswer),
    ("i am unable to answer", RefusalKind::CannotAnswer),
];

/// Lowercases and turns every run of non-alphanumerics into one space.
pub(crate) fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(' ');
    for ch in s.chars() {
        if ch.is_alphanumeric() {
            out.extend(ch.to_lowercase());
        } else if !out.ends_with(' ') {
            out.push(' ');
        }
    }
    if !out.ends_with(' ') {
        out.push(' ');
    }
    out
}

/// Whole-word containment on normalized text.
pub(crate) fn contains_phrase(normalized_haystack: &str, phrase: &str) -> bool {
    let p = normalize(phrase);
    !p.trim().is_empty() && normalized_haystack.contains(p.as_str())
}

/// The refusal kind a response expresses, if any.
pub fn canonical_refusal(response: &str) -> Option<RefusalKind> {
    let n = normalize(response);
    VARIANTS.iter().find(|(p, _)| contains_phrase(&n, p)).map(|(_, k)| *k)
}

impl RefusalKind {
    pub fn canonical_text(self) -> &'static str {
        match self {
            Self::NoneOfTheAbove => super::NONE_OF_THE_ABOVE,
            Self::IrrelevantChoices => "The choices are irrelevant",
            Self::Mismatched => "The video and question are mismatched",
            Self::AudioMissing => "The audio is missing",
            Self::VideoMissing => "The video is missing",
            Self::CannotAnswer => "I cannot answer",
        }
    }

    /// Refusal option offered to the fallback extractor for a task kind.
    pub fn extractor_option(kind: TaskKind) -> Option<(Self, &'static str)> {
        match kind {
            TaskKind::Mcit | TaskKind::Icit => Some((Self::NoneOfTheAbove, super::NONE_OF_THE_ABOVE)),
            TaskKind::Mvit | TaskKind::Mait => {
                Some((Self::Mismatched, "The visual/audio is incompatible with the question"))
            }
            TaskKind::CotSwap => Some((Self::Mismatched, "The visual/audio is incompatible")),
            TaskKind::Mat => Some((Self::AudioMissing, "The audio is missing")),
            TaskKind::Mvt => Some((Self::VideoMissing, "The video is missing")),
            TaskKind::CotStitch | TaskKind::Cat => None,
        }
    }
}
