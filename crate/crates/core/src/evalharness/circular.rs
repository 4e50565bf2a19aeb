use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    extract, ChoiceExtractor, Choice, ExtractionResult, QAItem, Result, RetryPolicy, Setting, Stage,
    Verdict, NONE_OF_THE_ABOVE,
};

/// What the model under test is shown on one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponderRequest<'a> {
    pub item_id: &'a str,
    pub question: &'a str,
    pub choices: &'a [Choice],
    pub setting: Setting,
    pub media_refs: &'a [String],
    pub pass: usize,
    pub prompt: String,
}

pub trait Responder: Send + Sync {
    /// Free-form answer, or a transport error message.
    fn respond(&self, request: &ResponderRequest<'_>) -> core::result::Result<String, String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassRecord {
    pub pass: usize,
    pub correct_label: Option<char>,
    pub extraction: ExtractionResult,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircularVerdict {
    pub item_id: String,
    pub passes_attempted: usize,
    pub passes_correct: usize,
    pub solved: bool,
    #[serde(default)]
    pub passes: Vec<PassRecord>,
}

impl CircularVerdict {
    /// Vanilla correctness is the outcome of the first pass.
    pub fn first_pass_correct(&self) -> bool {
        self.passes_correct >= 1
    }
}

fn pinned_tail(item: &QAItem) -> bool {
    item.setting == Setting::Instruction && item.choices.last().is_some_and(|c| c.text == NONE_OF_THE_ABOVE)
}

/// Shifts choice texts left by `shift` positions, keeping labels in place and
/// tracking the correct label. A trailing "None of the above" in the
/// instruction setting stays last.
pub fn rotate(item: &QAItem, shift: usize) -> QAItem {
    let n = item.choices.len();
    let m = if pinned_tail(item) { n - 1 } else { n };
    let mut out = item.clone();
    if m == 0 {
        return out;
    }
    for i in 0..m {
        out.choices[i].text = item.choices[(i + shift) % m].text.clone();
    }
    out.correct_label = item.correct_label.map(|l| {
        let c = (l as u8 - b'A') as usize;
        if c < m {
            super::label_at((c + m - shift % m) % m)
        } else {
            l
        }
    });
    out
}

fn render_prompt(item: &QAItem) -> String {
    let mut p = format!("{}\n", item.question);
    for c in &item.choices {
        p.push_str(&format!("{}. {}\n", c.label, c.text));
    }
    p
}

/// Up to N passes with the choices rotated one step each time, stopping at the
/// first incorrect pass. N is the number of choices.
pub fn circular_eval(
    item: &QAItem,
    responder: &dyn Responder,
    extractor: Option<&dyn ChoiceExtractor>,
    retry: RetryPolicy,
) -> Result<CircularVerdict> {
    item.validate()?;
    let n = item.choices.len();
    let mut passes = Vec::with_capacity(n);
    let mut correct = 0;
    for pass in 0..n {
        let rotated = rotate(item, pass);
        let req = ResponderRequest {
            item_id: &rotated.id,
            question: &rotated.question,
            choices: &rotated.choices,
            setting: rotated.setting,
            media_refs: &rotated.media_refs,
            pass,
            prompt: render_prompt(&rotated),
        };
        let extraction = match responder.respond(&req) {
            Ok(text) => extract(&text, &rotated, extractor, retry),
            Err(e) => ExtractionResult::new(Verdict::Error, Stage::Heuristic, "")
                .with_diagnostic(format!("responder failed: {e}")),
        };
        let ok = extraction.is_correct(&rotated);
        passes.push(PassRecord {
            pass,
            correct_label: rotated.correct_label,
            extraction,
            correct: ok,
        });
        if !ok {
            break;
        }
        correct += 1;
    }
    Ok(CircularVerdict {
        item_id: item.id.clone(),
        passes_attempted: passes.len(),
        passes_correct: correct,
        solved: correct == n,
        passes,
    })
}

/// Knows every item's answer and states it as "(X) text".
#[derive(Debug, Clone, Default)]
pub struct PerfectOracle {
    answers: BTreeMap<String, Option<String>>,
}

impl PerfectOracle {
    pub fn new(items: &[QAItem]) -> Self {
        Self {
            answers: items
                .iter()
                .map(|it| (it.id.clone(), it.correct_text().map(String::from)))
                .collect(),
        }
    }
}

impl Responder for PerfectOracle {
    fn respond(&self, req: &ResponderRequest<'_>) -> core::result::Result<String, String> {
        let answer = self
            .answers
            .get(req.item_id)
            .ok_or_else(|| format!("oracle has no answer for {}", req.item_id))?;
        Ok(match answer {
            Some(text) => match req.choices.iter().find(|c| &c.text == text) {
                Some(c) => format!("({}) {}", c.label, c.text),
                None => return Err(format!("answer text {text:?} not among choices")),
            },
            None => String::from(NONE_OF_THE_ABOVE),
        })
    }
}

/// Answers every pass with the same text.
#[derive(Debug, Clone)]
pub struct ConstantResponder(pub String);

impl Responder for ConstantResponder {
    fn respond(&self, _: &ResponderRequest<'_>) -> core::result::Result<String, String> {
        Ok(self.0.clone())
    }
}

/// Per-item, per-pass canned responses.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ScriptedResponder {
    pub script: BTreeMap<String, Vec<String>>,
    /// Used when an item or pass has no scripted line.
    pub fallback: String,
}

impl Responder for ScriptedResponder {
    fn respond(&self, req: &ResponderRequest<'_>) -> core::result::Result<String, String> {
        Ok(self
            .script
            .get(req.item_id)
            .and_then(|v| v.get(req.pass))
            .unwrap_or(&self.fallback)
            .clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalharness::{EvalError, RefusalKind};
    use crate::TaskKind;

    fn item(n: usize, correct: char, setting: Setting) -> QAItem {
        let mut texts: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        if setting == Setting::Instruction {
            texts.push(NONE_OF_THE_ABOVE.into());
        }
        QAItem {
            id: "it".into(),
            question: "q".into(),
            choices: QAItem::labelled(texts),
            correct_label: Some(correct),
            refusal: None,
            category: "Temporal".into(),
            task_kind: TaskKind::Mcit,
            setting,
            media_refs: Vec::new(),
        }
    }

    #[test]
    fn rotation_tracks_answer() {
        let it = item(4, 'C', Setting::Base);
        for s in 0..8 {
            let r = rotate(&it, s);
            assert_eq!(r.correct_text(), Some("t2"));
            let texts: Vec<&str> = r.choices.iter().map(|c| c.text.as_str()).collect();
            let start = texts.iter().position(|t| *t == "t0").unwrap();
            for k in 0..4 {
                assert_eq!(texts[(start + k) % 4], alloc::format!("t{k}"));
            }
        }
        let ins = item(3, 'B', Setting::Instruction);
        for s in 0..5 {
            let r = rotate(&ins, s);
            assert_eq!(r.choices[3].text, NONE_OF_THE_ABOVE);
            assert_eq!(r.correct_text(), Some("t1"));
        }
    }

    #[test]
    fn oracle_solves() {
        let it = item(4, 'B', Setting::Base);
        let v = circular_eval(&it, &PerfectOracle::new(&[it.clone()]), None, RetryPolicy::default()).unwrap();
        assert!(v.solved);
        assert_eq!((v.passes_attempted, v.passes_correct), (4, 4));
        let mut refusal = item(3, 'A', Setting::Base);
        refusal.correct_label = None;
        refusal.refusal = Some(RefusalKind::NoneOfTheAbove);
        let v = circular_eval(&refusal, &PerfectOracle::new(&[refusal.clone()]), None, RetryPolicy::default()).unwrap();
        assert!(v.solved);
    }

    #[test]
    fn constant_fails_when_answer_leaves_slot() {
        let it = item(4, 'A', Setting::Base);
        let v = circular_eval(&it, &ConstantResponder("A".into()), None, RetryPolicy::default()).unwrap();
        assert!(!v.solved);
        assert_eq!((v.passes_attempted, v.passes_correct), (2, 1));
    }

    #[test]
    fn early_exit_arithmetic() {
        let it = item(4, 'A', Setting::Base);
        let mut script = BTreeMap::new();
        script.insert("it".into(), alloc::vec!["A".into(), "D".into(), "A".into(), "A".into()]);
        let r = ScriptedResponder {
            script,
            fallback: String::new(),
        };
        let v = circular_eval(&it, &r, None, RetryPolicy::default()).unwrap();
        assert_eq!((v.passes_attempted, v.passes_correct, v.solved), (3, 2, false));
    }

    #[test]
    fn responder_error_is_a_failed_pass() {
        struct Down;
        impl Responder for Down {
            fn respond(&self, _: &ResponderRequest<'_>) -> core::result::Result<String, String> {
                Err("503".into())
            }
        }
        let v = circular_eval(&item(2, 'A', Setting::Base), &Down, None, RetryPolicy::default()).unwrap();
        assert_eq!((v.passes_attempted, v.passes_correct), (1, 0));
        assert_eq!(v.passes[0].extraction.verdict, Verdict::Error);
    }

    #[test]
    fn invalid_item_rejected() {
        let mut it = item(4, 'A', Setting::Base);
        it.choices.truncate(1);
        it.correct_label = Some('A');
        assert!(matches!(
            circular_eval(&it, &ConstantResponder("A".into()), None, RetryPolicy::default()),
            Err(EvalError::InvalidItem { .. })
        ));
    }
}
