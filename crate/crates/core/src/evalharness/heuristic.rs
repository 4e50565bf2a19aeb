
use alloc::vec::Vec;

use super::refusal::{canonical_refusal, contains_phrase, normalize};
use super::{ExtractionResult, QAItem, Stage, Verdict};

const CLARIFICATION: &[&str] = &[
    "clarify",
    "clarification",
    "provide more context",
    "provide more information",
    "provide more details",
    "need more information",
    "need more context",
    "please specify",
    "could you rephrase",
];

const PREFIXES: &[&str] = &[
    "the correct answer is",
    "the correct option is",
    "the answer is",
    "my answer is",
    "correct answer:",
    "answer:",
    "option",
    "choice",
];

/// Stage-one label extraction. Every input yields a verdict.
pub fn heuristic_match(response: &str, item: &QAItem) -> ExtractionResult {
    let stage2 = |why: &str| ExtractionResult::new(Verdict::NeedsStage2, Stage::Heuristic, response).with_diagnostic(why);
    let norm = normalize(response);
    if norm.trim().is_empty() {
        return stage2("empty response");
    }
    if CLARIFICATION.iter().any(|p| contains_phrase(&norm, p)) {
        return stage2("clarification request");
    }
    let body = strip_prefixes(response);
    match label_patterns(body, item) {
        Some(Ok(l)) => return ExtractionResult::new(Verdict::Matched(l), Stage::Heuristic, response),
        Some(Err(())) => return stage2("more than one option named"),
        None => {}
    }
    let body_norm = normalize(body);
    let exact: Vec<char> = item
        .choices
        .iter()
        .filter(|c| normalize(&c.text) == body_norm)
        .map(|c| c.label)
        .collect();
    if let [l] = exact[..] {
        return ExtractionResult::new(Verdict::Matched(l), Stage::Heuristic, response);
    }
    if let Some(kind) = canonical_refusal(response) {
        let v = match item.none_label() {
            Some(l) => Verdict::Matched(l),
            None => Verdict::Refusal(kind),
        };
        return ExtractionResult::new(v, Stage::Heuristic, response);
    }
    stage2("no label pattern")
}

fn strip_prefixes(response: &str) -> &str {
    let mut body = response.trim();
    if let Some(i) = body.to_ascii_lowercase().find("answer is ") {
        body = &body[i + "answer is ".len()..];
    }
    loop {
        body = body.trim_matches(|c: char| c.is_whitespace() || c == '*' || c == '"' || c == '`');
        let lower = body.to_ascii_lowercase();
        let hit = PREFIXES.iter().find(|p| {
            lower.starts_with(*p) && lower[p.len()..].chars().next().is_none_or(|c| !c.is_alphanumeric())
        });
        match hit {
            Some(p) => body = body[p.len()..].trim_start_matches(|c: char| c.is_whitespace() || c == ':'),
            None => return body,
        }
    }
}

/// `Some(Ok(l))` when exactly one label form fires, `Some(Err(()))` when
/// several conflict, `None` when no label form is present.
fn label_patterns(body: &str, item: &QAItem) -> Option<Result<char, ()>> {
    let bare = body.trim_matches(|c: char| c.is_whitespace() || "().:*\"'`".contains(c));
    let mut it = bare.chars();
    if let (Some(c), None) = (it.next(), it.next()) {
        let up = c.to_ascii_uppercase();
        if item.has_label(up) {
            return Some(Ok(up));
        }
    }

    if let Some((lead, tail)) = leading_label(body, item) {
        let own = item.choice(lead).map(|c| c.text.as_str()).unwrap_or("");
        return Some(if mentions_other(tail, item, lead, own) { Err(()) } else { Ok(lead) });
    }

    let paren = parenthesized(body, item);
    match paren.len() {
        0 => None,
        1 => {
            let l = paren[0];
            let rest = body.replace(&alloc::format!("({l})"), " ");
            Some(if stray_labels(&rest, item, l) { Err(()) } else { Ok(l) })
        }
        _ => Some(Err(())),
    }
}

fn leading_label<'a>(body: &'a str, item: &QAItem) -> Option<(char, &'a str)> {
    let b = body.as_bytes();
    if b.len() >= 3 && b[0] == b'(' && b[2] == b')' && item.has_label(b[1] as char) {
        return Some((b[1] as char, &body[3..]));
    }
    if b.len() >= 2 && item.has_label(b[0] as char) && matches!(b[1], b')' | b'.' | b',' | b':') {
        return Some((b[0] as char, &body[2..]));
    }
    None
}

fn parenthesized(body: &str, item: &QAItem) -> Vec<char> {
    let b = body.as_bytes();
    let mut out = Vec::new();
    for w in b.windows(3) {
        if w[0] == b'(' && w[2] == b')' && item.has_label(w[1] as char) && !out.contains(&(w[1] as char)) {
            out.push(w[1] as char);
        }
    }
    out
}

/// Whether `tail` names another choice, by text or by a standalone label.
fn mentions_other(tail: &str, item: &QAItem, lead: char, own_text: &str) -> bool {
    let mut t = normalize(tail);
    let own = normalize(own_text);
    if !own.trim().is_empty() {
        t = t.replace(own.as_str(), " ");
    }
    let text_hit = item
        .choices
        .iter()
        .filter(|c| c.label != lead)
        .any(|c| contains_phrase(&t, &c.text));
    text_hit || stray_labels(tail, item, lead)
}

/// Standalone uppercase label letters other than `lead`. "A" or "I" followed
/// by a lowercase word reads as an article or pronoun, not a label.
fn stray_labels(text: &str, item: &QAItem, lead: char) -> bool {
    let tokens: Vec<&str> = text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).collect();
    tokens.iter().enumerate().any(|(i, tok)| {
        let mut cs = tok.chars();
        let (Some(c), None) = (cs.next(), cs.next()) else {
            return false;
        };
        if !c.is_ascii_uppercase() || c == lead || !item.has_label(c) {
            return false;
        }
        let article = matches!(c, 'A' | 'I')
            && tokens.get(i + 1).and_then(|n| n.chars().next()).is_some_and(|n| n.is_lowercase());
        !article
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalharness::{RefusalKind, Setting};
    use crate::TaskKind;

    fn item(setting: Setting) -> QAItem {
        let mut texts = alloc::vec!["Guitar", "Piano", "Violin", "Drum"];
        if setting == Setting::Instruction {
            texts.push(super::super::NONE_OF_THE_ABOVE);
        }
        QAItem {
            id: "i".into(),
            question: "Which instrument is playing?".into(),
            choices: QAItem::labelled(texts),
            correct_label: Some('A'),
            refusal: None,
            category: "Existential".into(),
            task_kind: TaskKind::Mcit,
            setting,
            media_refs: Vec::new(),
        }
    }

    fn v(s: &str) -> Verdict {
        heuristic_match(s, &item(Setting::Base)).verdict
    }

    #[test]
    fn label_forms() {
        assert_eq!(v("(A) Guitar"), Verdict::Matched('A'));
        assert_eq!(v("B"), Verdict::Matched('B'));
        assert_eq!(v("C. Violin"), Verdict::Matched('C'));
        assert_eq!(v("D, the drum"), Verdict::Matched('D'));
        assert_eq!(v("The answer is B."), Verdict::Matched('B'));
        assert_eq!(v("Option C"), Verdict::Matched('C'));
        assert_eq!(v("I pick (D) here"), Verdict::Matched('D'));
        assert_eq!(v("piano"), Verdict::Matched('B'));
    }

    #[test]
    fn failures_go_to_stage_two() {
        assert_eq!(v("Apologies, can you please clarify the question?"), Verdict::NeedsStage2);
        assert_eq!(v("Either A or B seems right"), Verdict::NeedsStage2);
        assert_eq!(v("A cat, not B"), Verdict::NeedsStage2);
        assert_eq!(v("A) Guitar and Piano"), Verdict::NeedsStage2);
        assert_eq!(v("(A) or (B)"), Verdict::NeedsStage2);
        assert_eq!(v("E"), Verdict::NeedsStage2);
        assert_eq!(v(""), Verdict::NeedsStage2);
        assert_eq!(v("Options are hard"), Verdict::NeedsStage2);
    }

    #[test]
    fn refusals() {
        assert_eq!(v("None of the above."), Verdict::Refusal(RefusalKind::NoneOfTheAbove));
        let ins = item(Setting::Instruction);
        assert_eq!(heuristic_match("I cannot answer", &ins).verdict, Verdict::Matched('E'));
        assert_eq!(heuristic_match("none of the above", &ins).verdict, Verdict::Matched('E'));
    }

    #[test]
    fn total_on_arbitrary_text() {
        for s in ["(", "()", "(Z)", "A)", "é(A)", "a.", "\u{1F600}"] {
            let _ = v(s);
        }
    }
}
