use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::item::label_at;
use super::{heuristic_match, Choice, ExtractionResult, QAItem, RefusalKind, Stage, Verdict};

/// Extractor output meaning no option fits.
pub const NO_MATCH: &str = "No match found";

const TEMPLATE_HEAD: &str = "Can you help me match an answer with a set of options for a single correct answer type question? I will provide you with a question, a set of options, and a response from an agent. You are required to map the agent's response to the most similar option from the set. You should respond with a single uppercase character in 'A', 'B', 'C', 'D', and 'E' depending on the choice you feel is the most appropriate match. If there are no similar options you might output 'No match found'. Please refrain from being subjective while matching and do not use any external knowledge. Below are some examples:
Example 1:
Question: What color is the man's shirt who is sitting left of the object making this sound?
Options: A. Green B. Red C. Yellow D. Black
Answer: The person sitting next to the record player is wearing a black color shirt
Your output: D
Example 2:
Question: What does the audio-visual event constitute?
Options: A. A dog barking at a cat B. A dog barking on being hit by a stick C. The dog is hungry D. The dog is chasing another dog
Answer: It is a wolf
Your output: No match found
";

/// What the fallback extractor sees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionRequest<'a> {
    pub question: &'a str,
    /// The item's choices plus any task-specific refusal option.
    pub options: Vec<Choice>,
    pub response: &'a str,
    pub prompt: String,
}

pub trait ChoiceExtractor: Send + Sync {
    /// Raw extractor output, or a transport error message.
    fn complete(&self, request: &ExtractionRequest<'_>) -> core::result::Result<String, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_attempts: 3 }
    }
}

pub fn render_extraction_prompt(question: &str, options: &[Choice], response: &str) -> String {
    let opts: Vec<String> = options.iter().map(|c| format!("{}. {}", c.label, c.text)).collect();
    format!(
        "{TEMPLATE_HEAD}Question: {question}\nOptions: {}\nAnswer: {response}\nYour output:",
        opts.join(" ")
    )
}

/// Item choices plus the refusal option the extractor may pick, if any.
fn extractor_options(item: &QAItem) -> (Vec<Choice>, Option<(char, RefusalKind)>) {
    let mut options = item.choices.clone();
    let extra = match (item.none_label(), RefusalKind::extractor_option(item.task_kind)) {
        (None, Some((kind, text))) => {
            let label = label_at(options.len());
            options.push(Choice {
                label,
                text: text.into(),
            });
            Some((label, kind))
        }
        _ => None,
    };
    (options, extra)
}

/// Stage-two extraction through an external extractor.
pub fn fallback_extract(
    response: &str,
    item: &QAItem,
    extractor: &dyn ChoiceExtractor,
    retry: RetryPolicy,
) -> ExtractionResult {
    let (options, extra) = extractor_options(item);
    let prompt = render_extraction_prompt(&item.question, &options, response);
    let req = ExtractionRequest {
        question: &item.question,
        options,
        response,
        prompt,
    };
    let mut last_err = String::new();
    for _ in 0..retry.max_attempts.max(1) {
        match extractor.complete(&req) {
            Ok(out) => return parse_output(&out, item, extra, response),
            Err(e) => last_err = e,
        }
    }
    ExtractionResult::new(Verdict::Error, Stage::Fallback, response)
        .with_diagnostic(format!("extractor failed after {} attempts: {last_err}", retry.max_attempts.max(1)))
}

fn parse_output(out: &str, item: &QAItem, extra: Option<(char, RefusalKind)>, response: &str) -> ExtractionResult {
    let t = out
        .trim()
        .trim_matches(|c: char| "\"'`*".contains(c))
        .trim_end_matches('.')
        .trim();
    let done = |v| ExtractionResult::new(v, Stage::Fallback, response);
    if t.eq_ignore_ascii_case(NO_MATCH) {
        return done(Verdict::NoMatch);
    }
    let mut cs = t.chars();
    if let (Some(c), None) = (cs.next(), cs.next()) {
        if item.has_label(c) {
            return done(Verdict::Matched(c));
        }
        if let Some((l, kind)) = extra {
            if c == l {
                return done(Verdict::Refusal(kind));
            }
        }
        return done(Verdict::NoMatch).with_diagnostic(format!("extractor label {c:?} out of range"));
    }
    done(Verdict::NoMatch).with_diagnostic(format!("malformed extractor output {out:?}"))
}

/// Heuristic matching, then the extractor only when stage one defers.
pub fn extract(
    response: &str,
    item: &QAItem,
    extractor: Option<&dyn ChoiceExtractor>,
    retry: RetryPolicy,
) -> ExtractionResult {
    let first = heuristic_match(response, item);
    match (&first.verdict, extractor) {
        (Verdict::NeedsStage2, Some(x)) => fallback_extract(response, item, x, retry),
        _ => first,
    }
}

/// Always answers with the same text.
#[derive(Debug, Clone)]
pub struct EchoExtractor(pub String);

impl ChoiceExtractor for EchoExtractor {
    fn complete(&self, _: &ExtractionRequest<'_>) -> core::result::Result<String, String> {
        Ok(self.0.clone())
    }
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "being", "by", "for", "from", "i", "in", "is", "it", "its", "maybe",
    "not", "of", "on", "or", "that", "the", "think", "this", "to", "was", "with",
];

/// Offline extractor: picks the option sharing the most content words with
/// the response, answering "No match found" on zero overlap or a tie.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalExtractor;

fn content_words(s: &str) -> BTreeSet<String> {
    super::refusal::normalize(s)
        .split(' ')
        .filter(|w| w.chars().count() > 1 && !STOPWORDS.contains(w))
        .map(String::from)
        .collect()
}

impl ChoiceExtractor for LexicalExtractor {
    fn complete(&self, req: &ExtractionRequest<'_>) -> core::result::Result<String, String> {
        let words = content_words(req.response);
        let scores: Vec<(char, usize)> = req
            .options
            .iter()
            .map(|c| (c.label, content_words(&c.text).intersection(&words).count()))
            .collect();
        let best = scores.iter().map(|s| s.1).max().unwrap_or(0);
        let winners: Vec<char> = scores.iter().filter(|s| s.1 == best).map(|s| s.0).collect();
        Ok(match (best, &winners[..]) {
            (0, _) => NO_MATCH.into(),
            (_, [l]) => String::from(*l),
            _ => NO_MATCH.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evalharness::fixtures::{dog_item, shirt_item};
    use core::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        fails: u32,
        calls: AtomicU32,
    }

    impl ChoiceExtractor for Flaky {
        fn complete(&self, _: &ExtractionRequest<'_>) -> core::result::Result<String, String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fails {
                Err("timeout".into())
            } else {
                Ok("B".into())
            }
        }
    }

    #[test]
    fn prompt_box_examples() {
        let r = "The person sitting next to the record player is wearing a black color shirt";
        let shirt = fallback_extract(r, &shirt_item(), &LexicalExtractor, RetryPolicy::default());
        assert_eq!(shirt.verdict, Verdict::Matched('D'));
        let wolf = fallback_extract("It is a wolf", &dog_item(), &LexicalExtractor, RetryPolicy::default());
        assert_eq!(wolf.verdict, Verdict::NoMatch);
    }

    #[test]
    fn echo_and_malformed() {
        let it = shirt_item();
        let p = RetryPolicy::default();
        assert_eq!(fallback_extract("x", &it, &EchoExtractor("C".into()), p).verdict, Verdict::Matched('C'));
        let bad = fallback_extract("x", &it, &EchoExtractor("maybe C or D".into()), p);
        assert_eq!(bad.verdict, Verdict::NoMatch);
        assert!(bad.diagnostic.is_some());
        let refusal = fallback_extract("x", &it, &EchoExtractor("E".into()), p);
        assert_eq!(refusal.verdict, Verdict::Refusal(RefusalKind::NoneOfTheAbove));
        assert_eq!(fallback_extract("x", &it, &EchoExtractor("No match found.".into()), p).verdict, Verdict::NoMatch);
    }

    #[test]
    fn retries_then_error() {
        let it = shirt_item();
        let ok = Flaky {
            fails: 2,
            calls: AtomicU32::new(0),
        };
        assert_eq!(fallback_extract("x", &it, &ok, RetryPolicy { max_attempts: 3 }).verdict, Verdict::Matched('B'));
        let dead = Flaky {
            fails: 10,
            calls: AtomicU32::new(0),
        };
        let r = fallback_extract("x", &it, &dead, RetryPolicy { max_attempts: 3 });
        assert_eq!(r.verdict, Verdict::Error);
        assert_eq!(dead.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn stage_two_only_when_deferred() {
        let it = shirt_item();
        let echo = EchoExtractor("A".into());
        let r = extract("D", &it, Some(&echo), RetryPolicy::default());
        assert_eq!((r.verdict, r.stage), (Verdict::Matched('D'), Stage::Heuristic));
        let r = extract("hmm", &it, Some(&echo), RetryPolicy::default());
        assert_eq!((r.verdict, r.stage), (Verdict::Matched('A'), Stage::Fallback));
        let r = extract("hmm", &it, None, RetryPolicy::default());
        assert_eq!(r.verdict, Verdict::NeedsStage2);
    }

    #[test]
    fn prompt_lists_options() {
        let p = render_extraction_prompt("Q?", &QAItem::labelled(["x", "y"]), "resp");
        assert!(p.starts_with("Can you help me match"));
        assert!(p.ends_with("Question: Q?\nOptions: A. x B. y\nAnswer: resp\nYour output:"));
    }
}
