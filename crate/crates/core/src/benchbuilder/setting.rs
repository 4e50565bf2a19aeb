use alloc::format;

use super::{BuiltItem, ChoiceRole};
use crate::evalharness::{label_at, Choice, QAItem, Setting, NONE_OF_THE_ABOVE};

pub const INSTRUCTION_SENTENCE: &str = "If the correct answer is not present respond with None of the above";

fn has_none_option(item: &QAItem) -> bool {
    item.choices.last().is_some_and(|c| c.text == NONE_OF_THE_ABOVE)
}

/// Base is the identity. Instruction appends the instruction sentence and a
/// final "None of the above" choice, which becomes the key for refusal-keyed
/// items. Applying it twice is the same as once.
pub fn render_setting(item: &QAItem, setting: Setting) -> QAItem {
    let mut out = item.clone();
    if setting == Setting::Base {
        return out;
    }
    if !out.question.trim_end().ends_with(INSTRUCTION_SENTENCE) {
        out.question = format!("{} {INSTRUCTION_SENTENCE}", out.question.trim_end());
    }
    if !has_none_option(&out) {
        out.choices.push(Choice {
            label: label_at(out.choices.len()),
            text: NONE_OF_THE_ABOVE.into(),
        });
    }
    if out.correct_label.is_none() {
        out.correct_label = out.choices.last().map(|c| c.label);
    }
    out.setting = Setting::Instruction;
    out
}

pub fn render_built(mut b: BuiltItem, setting: Setting) -> BuiltItem {
    let before = b.item.choices.len();
    b.item = render_setting(&b.item, setting);
    if b.item.choices.len() > before {
        b.provenance.choice_roles.push(ChoiceRole::Refusal);
    }
    b.provenance.setting = b.item.setting;
    b
}
