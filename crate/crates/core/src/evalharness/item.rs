use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{EvalError, RefusalKind, Result};
use crate::TaskKind;

pub const NONE_OF_THE_ABOVE: &str = "None of the above";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    #[default]
    Base,
    Instruction,
}

impl core::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base" => Ok(Self::Base),
            "instruction" => Ok(Self::Instruction),
            other => Err(format!("unknown setting {other:?} (expected base or instruction)")),
        }
    }
}

impl core::fmt::Display for Setting {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::Base => "base",
            Self::Instruction => "instruction",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Choice {
    pub label: char,
    pub text: String,
}

pub fn label_at(i: usize) -> char {
    (b'A' + i as u8) as char
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub question: String,
    pub choices: Vec<Choice>,
    /// `None` when the keyed answer is a refusal rather than a listed choice.
    pub correct_label: Option<char>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refusal: Option<RefusalKind>,
    #[serde(default)]
    pub category: String,
    pub task_kind: TaskKind,
    pub setting: Setting,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub media_refs: Vec<String>,
}

impl QAItem {
    /// Builds labelled choices A, B, ... from texts.
    pub fn labelled(texts: impl IntoIterator<Item = impl Into<String>>) -> Vec<Choice> {
        texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Choice {
                label: label_at(i),
                text: t.into(),
            })
            .collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = char> + '_ {
        self.choices.iter().map(|c| c.label)
    }

    pub fn has_label(&self, l: char) -> bool {
        self.choices.iter().any(|c| c.label == l)
    }

    pub fn choice(&self, l: char) -> Option<&Choice> {
        self.choices.iter().find(|c| c.label == l)
    }

    pub fn correct_text(&self) -> Option<&str> {
        self.correct_label.and_then(|l| self.choice(l)).map(|c| c.text.as_str())
    }

    /// Label of an explicit "None of the above" choice, if the item has one.
    pub fn none_label(&self) -> Option<char> {
        self.choices
            .iter()
            .find(|c| c.text.eq_ignore_ascii_case(NONE_OF_THE_ABOVE))
            .map(|c| c.label)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| EvalError::InvalidItem {
            id: self.id.clone(),
            reason,
        };
        if !(2..=5).contains(&self.choices.len()) {
            return Err(bad(format!("{} choices, expected 2 to 5", self.choices.len())));
        }
        for (i, c) in self.choices.iter().enumerate() {
            if c.label != label_at(i) {
                return Err(bad(format!("choice {i} labelled {:?}, expected {:?}", c.label, label_at(i))));
            }
        }
        if self.setting == Setting::Instruction && self.choices.last().is_some_and(|c| c.text != NONE_OF_THE_ABOVE) {
            return Err(bad(format!("instruction items must end with {NONE_OF_THE_ABOVE:?}")));
        }
        match self.correct_label {
            Some(l) if !self.has_label(l) => Err(bad(format!("correct label {l:?} out of range"))),
            None if self.refusal.is_none() => Err(bad("no correct label and no refusal key".into())),
            _ => Ok(()),
        }
    }
}
