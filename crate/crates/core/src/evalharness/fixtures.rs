//! Hand-labelled extraction corpus and synthetic item sets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{label_at, QAItem, RefusalKind, Setting, Stage, Verdict, NONE_OF_THE_ABOVE};
use crate::TaskKind;

fn mk(id: &str, question: &str, texts: &[&str], correct: Option<char>, kind: TaskKind, setting: Setting) -> QAItem {
    QAItem {
        id: id.into(),
        question: question.into(),
        choices: QAItem::labelled(texts.iter().copied()),
        correct_label: correct,
        refusal: correct.is_none().then_some(RefusalKind::NoneOfTheAbove),
        category: "Existential".into(),
        task_kind: kind,
        setting,
        media_refs: Vec::new(),
    }
}

pub fn shirt_item() -> QAItem {
    mk(
        "shirt",
        "What color is the man's shirt who is sitting left of the object making this sound?",
        &["Green", "Red", "Yellow", "Black"],
        Some('D'),
        TaskKind::Mcit,
        Setting::Base,
    )
}

pub fn dog_item() -> QAItem {
    mk(
        "dog",
        "What does the audio-visual event constitute?",
        &[
            "A dog barking at a cat",
            "A dog barking on being hit by a stick",
            "The dog is hungry",
            "The dog is chasing another dog",
        ],
        Some('A'),
        TaskKind::Mcit,
        Setting::Base,
    )
}

fn instruments(setting: Setting) -> QAItem {
    let mut t = alloc::vec!["Guitar", "Piano", "Violin", "Drum"];
    if setting == Setting::Instruction {
        t.push(NONE_OF_THE_ABOVE);
    }
    mk("inst", "Which instrument is playing?", &t, Some('A'), TaskKind::Mcit, setting)
}

fn guitars() -> QAItem {
    mk(
        "guitars",
        "Which instrument sounds with the pipa?",
        &["Flute", "Guitar", "Middle", "Acoustic guitar"],
        Some('D'),
        TaskKind::Mait,
        Setting::Base,
    )
}

/// A response, the item it answers, and the hand label after both stages
/// (the fallback stage using [`super::LexicalExtractor`]).
#[derive(Debug, Clone)]
pub struct ExtractionFixture {
    pub response: &'static str,
    pub item: QAItem,
    pub expected: Verdict,
    pub stage: Stage,
}

pub fn extraction_corpus() -> Vec<ExtractionFixture> {
    use Stage::{Fallback as F, Heuristic as H};
    use Verdict::*;
    let base = instruments(Setting::Base);
    let ins = instruments(Setting::Instruction);
    let (g, shirt, dog) = (guitars(), shirt_item(), dog_item());
    let rows: Vec<(&'static str, &QAItem, Verdict, Stage)> = alloc::vec![
        ("A", &base, Matched('A'), H),
        ("B.", &base, Matched('B'), H),
        ("C)", &base, Matched('C'), H),
        ("(D)", &base, Matched('D'), H),
        ("  b  ", &base, Matched('B'), H),
        ("**A**", &base, Matched('A'), H),
        ("A) Guitar", &base, Matched('A'), H),
        ("B. Piano", &base, Matched('B'), H),
        ("C, the violin", &base, Matched('C'), H),
        ("(A) Guitar", &base, Matched('A'), H),
        ("A. Guitar is the instrument playing", &base, Matched('A'), H),
        ("The answer is B", &base, Matched('B'), H),
        ("Answer: C", &base, Matched('C'), H),
        ("Option D", &base, Matched('D'), H),
        ("I think (C) is correct", &base, Matched('C'), H),
        ("piano", &base, Matched('B'), H),
        ("Guitar.", &base, Matched('A'), H),
        ("None of the above", &base, Refusal(RefusalKind::NoneOfTheAbove), H),
        ("The choices are irrelevant.", &base, Refusal(RefusalKind::IrrelevantChoices), H),
        ("the video and question are mismatched", &base, Refusal(RefusalKind::Mismatched), H),
        ("The audio is missing", &base, Refusal(RefusalKind::AudioMissing), H),
        ("The video is missing", &base, Refusal(RefusalKind::VideoMissing), H),
        ("I cannot answer this question.", &base, Refusal(RefusalKind::CannotAnswer), H),
        ("E", &ins, Matched('E'), H),
        ("None of the above", &ins, Matched('E'), H),
        ("I cannot answer", &ins, Matched('E'), H),
        ("D) Acoustic guitar", &g, Matched('D'), H),
        ("Apologies, can you please clarify the question?", &base, NoMatch, F),
        ("I'm not sure. Could you provide more context?", &base, NoMatch, F),
        ("Either A or B seems right", &base, NoMatch, F),
        ("A cat, not B", &base, NoMatch, F),
        ("A) Guitar, or maybe B) Piano", &base, NoMatch, F),
        ("A) Guitar and Piano", &base, NoMatch, F),
        ("(A) or (B)", &base, NoMatch, F),
        ("B, D", &base, NoMatch, F),
        ("D) Drum, not B", &base, Matched('D'), F),
        ("F", &base, NoMatch, F),
        ("Cats are loud", &base, NoMatch, F),
        ("The sound comes from a violin being played", &base, Matched('C'), F),
        ("Honestly it sounds like none", &base, Refusal(RefusalKind::NoneOfTheAbove), F),
        (
            "The person sitting next to the record player is wearing a black color shirt",
            &shirt,
            Matched('D'),
            F,
        ),
        ("It is a wolf", &dog, NoMatch, F),
    ];
    rows.into_iter()
        .map(|(response, item, expected, stage)| ExtractionFixture {
            response,
            item: item.clone(),
            expected,
            stage,
        })
        .collect()
}

/// `n` base-setting items with `n_choices` options whose keys cycle through
/// the labels, so every label is correct equally often.
pub fn balanced_items(n: usize, n_choices: usize) -> Vec<QAItem> {
    const CATEGORIES: [&str; 4] = ["Existential", "Localization", "Temporal", "World Knowledge"];
    (0..n)
        .map(|i| QAItem {
            id: format!("bal-{i:04}"),
            question: format!("Synthetic question {i}?"),
            choices: QAItem::labelled((0..n_choices).map(|k| format!("option {i}-{k}"))),
            correct_label: Some(label_at(i % n_choices)),
            refusal: None,
            category: String::from(CATEGORIES[(i / n_choices) % CATEGORIES.len()]),
            task_kind: TaskKind::Mcit,
            setting: Setting::Base,
            media_refs: Vec::new(),
        })
        .collect()
}
