use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    alignment_filter, BuiltItem, ChoiceRole, LookupTables, MediaTracks, Provenance, Segment, Skip, SkipReason,
    SourceSample,
};
use crate::evalharness::{label_at, Choice, QAItem, RefusalKind, Setting};
use crate::rng::{self, ChaCha8Rng};
use crate::TaskKind;

pub const COT_QUESTION: &str = "What is the sequence of events in the video?";
const SIMULTANEOUS: &str = "Both of them occur at the same time.";
/// Distractors drawn from a pool per item, at most.
const POOL_DRAWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildOptions {
    pub seed: u64,
    /// Apply the audio-visual alignment filter to samples used by the
    /// compositional tasks.
    #[serde(default = "yes")]
    pub alignment_filter: bool,
}

fn yes() -> bool {
    true
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            alignment_filter: true,
        }
    }
}

type Built = core::result::Result<BuiltItem, SkipReason>;

enum Key {
    /// The entry with [`ChoiceRole::Key`] is correct.
    Choice,
    Refusal(RefusalKind),
}

struct Draft<'a> {
    task: TaskKind,
    hosts: Vec<&'a SourceSample>,
    question: String,
    category: String,
    entries: Vec<(String, ChoiceRole)>,
    key: Key,
    substituted: Vec<&'static str>,
    media: MediaTracks,
}

fn item_rng(seed: u64, task: TaskKind, ids: &[&str]) -> ChaCha8Rng {
    let mut label = String::from(task.slug());
    for id in ids {
        label.push('/');
        label.push_str(id);
    }
    rng::seeded(rng::derive_seed(seed, &label))
}

fn source(s: &SourceSample) -> Segment {
    Segment::Source {
        sample_id: s.id.clone(),
        media_ref: s.media_ref.clone(),
    }
}

fn same_text(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Up to `k` distinct entries of `pool`, in random order.
fn draw<'a>(r: &mut ChaCha8Rng, pool: &[&'a str], k: usize) -> Vec<&'a str> {
    let k = k.min(pool.len());
    index::sample(r, pool.len(), k).into_iter().map(|i| pool[i]).collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.trim().chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn article(word: &str) -> &'static str {
    match word.trim().chars().next() {
        Some(c) if "aeiouAEIOU".contains(c) => "an",
        _ => "a",
    }
}

fn finish(d: Draft<'_>, r: &mut ChaCha8Rng) -> BuiltItem {
    let mut entries = d.entries;
    entries.shuffle(r);
    let choices: Vec<Choice> = entries
        .iter()
        .enumerate()
        .map(|(i, (t, _))| Choice {
            label: label_at(i),
            text: t.clone(),
        })
        .collect();
    let (correct_label, refusal) = match d.key {
        Key::Choice => (entries.iter().position(|e| e.1 == ChoiceRole::Key).map(label_at), None),
        Key::Refusal(k) => (None, Some(k)),
    };
    let ids: Vec<&str> = d.hosts.iter().map(|s| s.id.as_str()).collect();
    let mut media_refs = Vec::new();
    for (track, segs) in [("visual", &d.media.visual), ("audio", &d.media.audio)] {
        for s in segs {
            media_refs.push(match s {
                Segment::Source { media_ref, .. } => format!("{track}:{media_ref}"),
                Segment::Tombstone => format!("{track}:deleted"),
            });
        }
    }
    BuiltItem {
        item: QAItem {
            id: format!("{}-{}", d.task.slug(), ids.join("-")),
            question: d.question,
            choices,
            correct_label,
            refusal,
            category: d.category,
            task_kind: d.task,
            setting: Setting::Base,
            media_refs,
        },
        provenance: Provenance {
            sources: ids.iter().map(|s| String::from(*s)).collect(),
            transformer: d.task,
            substituted: d.substituted.iter().map(|s| String::from(*s)).collect(),
            setting: Setting::Base,
            media: d.media,
            choice_roles: entries.iter().map(|e| e.1).collect(),
        },
    }
}

fn own_tracks(s: &SourceSample) -> MediaTracks {
    MediaTracks {
        visual: alloc::vec![source(s)],
        audio: alloc::vec![source(s)],
    }
}

/// Answer options for a sample other than its answer: the source options if
/// present, else the T3 answers for its question category.
fn answer_pool<'a>(s: &'a SourceSample, tables: &'a LookupTables, answer: &str) -> core::result::Result<Vec<&'a str>, SkipReason> {
    let qa = s.source_qa.as_ref().ok_or(SkipReason::MissingQa)?;
    let mut seen = BTreeSet::new();
    let raw: Vec<&str> = if qa.options.is_empty() {
        let cat = tables.category_of(s).ok_or(SkipReason::UnknownCategory)?;
        tables.t3.get(cat).ok_or(SkipReason::UnknownCategory)?.iter().map(String::as_str).collect()
    } else {
        qa.options.iter().map(String::as_str).collect()
    };
    Ok(raw
        .into_iter()
        .filter(|o| !same_text(o, answer) && seen.insert(o.trim().to_lowercase()))
        .collect())
}

fn category(s: &SourceSample, tables: &LookupTables) -> String {
    tables.category_of(s).map(String::from).unwrap_or_default()
}

/// The answer is removed; a same-supercategory replacement joins the
/// remaining options and the key is a refusal.
pub fn build_mcit(s: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    let qa = s.source_qa.as_ref().ok_or(SkipReason::MissingQa)?;
    let pool = answer_pool(s, tables, &qa.answer)?;
    let bucket: Vec<&str> = tables
        .t2
        .get(&s.supercategory)
        .map(|b| {
            b.iter()
                .map(String::as_str)
                .filter(|c| !same_text(c, &qa.answer) && !pool.iter().any(|p| same_text(p, c)))
                .collect()
        })
        .unwrap_or_default();
    if bucket.is_empty() {
        return Err(SkipReason::ExhaustedBucket);
    }
    if pool.is_empty() {
        return Err(SkipReason::InsufficientPool);
    }
    let mut r = item_rng(opts.seed, TaskKind::Mcit, &[&s.id]);
    let substitute = bucket[r.random_range(0..bucket.len())];
    let mut entries: Vec<(String, ChoiceRole)> =
        draw(&mut r, &pool, POOL_DRAWS).into_iter().map(|o| (o.into(), ChoiceRole::Pool)).collect();
    entries.push((substitute.into(), ChoiceRole::Substitute));
    let d = Draft {
        task: TaskKind::Mcit,
        hosts: alloc::vec![s],
        question: qa.question.clone(),
        category: category(s, tables),
        entries,
        key: Key::Refusal(RefusalKind::NoneOfTheAbove),
        substituted: alloc::vec!["answer"],
        media: own_tracks(s),
    };
    Ok(finish(d, &mut r))
}

/// Every option is a class from T1 of the sample's class.
pub fn build_icit(s: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    let qa = s.source_qa.as_ref().ok_or(SkipReason::MissingQa)?;
    let pool: Vec<&str> = tables
        .unrelated(&s.class_label)
        .map(|u| u.iter().map(String::as_str).collect())
        .unwrap_or_default();
    if pool.len() < 4 {
        return Err(SkipReason::InsufficientPool);
    }
    let mut r = item_rng(opts.seed, TaskKind::Icit, &[&s.id]);
    let entries = draw(&mut r, &pool, 4)
        .into_iter()
        .map(|o| (capitalize(o), ChoiceRole::Unrelated))
        .collect();
    let d = Draft {
        task: TaskKind::Icit,
        hosts: alloc::vec![s],
        question: qa.question.clone(),
        category: category(s, tables),
        entries,
        key: Key::Refusal(RefusalKind::IrrelevantChoices),
        substituted: alloc::vec!["options"],
        media: own_tracks(s),
    };
    Ok(finish(d, &mut r))
}

fn valid_donor(host: &SourceSample, d: &SourceSample, tables: &LookupTables) -> bool {
    d.id != host.id
        && tables.is_unrelated(&host.class_label, &d.class_label)
        && !tables.same_bucket(&host.class_label, &d.class_label)
}

fn mismatch(task: TaskKind, s: &SourceSample, tables: &LookupTables, manifest: &[SourceSample], opts: &BuildOptions) -> Built {
    let qa = s.source_qa.as_ref().ok_or(SkipReason::MissingQa)?;
    let donors: Vec<&SourceSample> = manifest.iter().filter(|d| valid_donor(s, d, tables)).collect();
    if donors.is_empty() {
        return Err(SkipReason::NoDonor);
    }
    let pool = answer_pool(s, tables, &qa.answer)?;
    if pool.is_empty() {
        return Err(SkipReason::InsufficientPool);
    }
    let mut r = item_rng(opts.seed, task, &[&s.id]);
    let donor = donors[r.random_range(0..donors.len())];
    let mut entries: Vec<(String, ChoiceRole)> =
        draw(&mut r, &pool, POOL_DRAWS).into_iter().map(|o| (o.into(), ChoiceRole::Pool)).collect();
    entries.push((qa.answer.clone(), ChoiceRole::Original));
    let (media, substituted) = if task == TaskKind::Mvit {
        (
            MediaTracks {
                visual: alloc::vec![source(donor)],
                audio: alloc::vec![source(s)],
            },
            "visual",
        )
    } else {
        (
            MediaTracks {
                visual: alloc::vec![source(s)],
                audio: alloc::vec![source(donor)],
            },
            "audio",
        )
    };
    let d = Draft {
        task,
        hosts: alloc::vec![s, donor],
        question: qa.question.clone(),
        category: category(s, tables),
        entries,
        key: Key::Refusal(RefusalKind::Mismatched),
        substituted: alloc::vec![substituted],
        media,
    };
    Ok(finish(d, &mut r))
}

/// Visual content replaced by a T1-unrelated donor's.
pub fn build_mvit(s: &SourceSample, tables: &LookupTables, manifest: &[SourceSample], opts: &BuildOptions) -> Built {
    mismatch(TaskKind::Mvit, s, tables, manifest, opts)
}

/// Audio content replaced by a T1-unrelated donor's.
pub fn build_mait(s: &SourceSample, tables: &LookupTables, manifest: &[SourceSample], opts: &BuildOptions) -> Built {
    mismatch(TaskKind::Mait, s, tables, manifest, opts)
}

fn deletion(task: TaskKind, s: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    if !s.requires_both {
        return Err(SkipReason::NotDualModality);
    }
    let qa = s.source_qa.as_ref().ok_or(SkipReason::MissingQa)?;
    let cat = tables.category_of(s).ok_or(SkipReason::UnknownCategory)?;
    let t3 = tables.t3.get(cat).ok_or(SkipReason::UnknownCategory)?;
    let pool: Vec<&str> = t3.iter().map(String::as_str).filter(|o| !same_text(o, &qa.answer)).collect();
    if pool.is_empty() {
        return Err(SkipReason::InsufficientPool);
    }
    let mut r = item_rng(opts.seed, task, &[&s.id]);
    let mut entries: Vec<(String, ChoiceRole)> =
        draw(&mut r, &pool, POOL_DRAWS).into_iter().map(|o| (o.into(), ChoiceRole::Pool)).collect();
    entries.push((qa.answer.clone(), ChoiceRole::Original));
    let (media, removed, refusal) = if task == TaskKind::Mvt {
        (
            MediaTracks {
                visual: alloc::vec![Segment::Tombstone],
                audio: alloc::vec![source(s)],
            },
            "visual",
            RefusalKind::VideoMissing,
        )
    } else {
        (
            MediaTracks {
                visual: alloc::vec![source(s)],
                audio: alloc::vec![Segment::Tombstone],
            },
            "audio",
            RefusalKind::AudioMissing,
        )
    };
    let d = Draft {
        task,
        hosts: alloc::vec![s],
        question: qa.question.clone(),
        category: String::from(cat),
        entries,
        key: Key::Refusal(refusal),
        substituted: alloc::vec![removed],
        media,
    };
    Ok(finish(d, &mut r))
}

/// Video deleted, audio kept.
pub fn build_mvt(s: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    deletion(TaskKind::Mvt, s, tables, opts)
}

/// Audio deleted, video kept.
pub fn build_mat(s: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    deletion(TaskKind::Mat, s, tables, opts)
}

fn stitch_ok(a: &SourceSample, b: &SourceSample, tables: &LookupTables) -> core::result::Result<(), SkipReason> {
    if a.id == b.id || same_text(&a.class_label, &b.class_label) {
        return Err(SkipReason::SameClass);
    }
    if !(tables.is_unrelated(&a.class_label, &b.class_label) && tables.is_unrelated(&b.class_label, &a.class_label)) {
        return Err(SkipReason::RelatedPair);
    }
    Ok(())
}

fn swap_ok(a: &SourceSample, b: &SourceSample, tables: &LookupTables) -> core::result::Result<(), SkipReason> {
    if a.id == b.id || same_text(&a.class_label, &b.class_label) {
        return Err(SkipReason::SameClass);
    }
    let shared_bucket = tables.same_bucket(&a.class_label, &b.class_label)
        || matches!((tables.bucket_of(&a.class_label), tables.bucket_of(&b.class_label)), (Some(x), Some(y)) if x == y)
        || same_text(&a.supercategory, &b.supercategory);
    if shared_bucket {
        return Err(SkipReason::SameBucket);
    }
    Ok(())
}

fn cat_ok(a: &SourceSample, b: &SourceSample) -> core::result::Result<(), SkipReason> {
    let (Some(x), Some(y)) = (&a.event, &b.event) else {
        return Err(SkipReason::MissingAttribute);
    };
    if a.id == b.id {
        return Err(SkipReason::SameClass);
    }
    if same_text(&x.attribute, &y.attribute) {
        return Err(SkipReason::DegeneratePermutation);
    }
    Ok(())
}

/// Classes available for an unrelated-pair distractor, minus `exclude`.
fn class_pool<'a>(tables: &'a LookupTables, exclude: &[&str]) -> Vec<&'a str> {
    let mut all: BTreeSet<&str> = BTreeSet::new();
    for (k, v) in &tables.t1 {
        all.insert(k);
        all.extend(v.iter().map(String::as_str));
    }
    for v in tables.t2.values() {
        all.extend(v.iter().map(String::as_str));
    }
    all.into_iter().filter(|c| !exclude.iter().any(|e| same_text(c, e))).collect()
}

fn order_entries(
    x: &str,
    y: &str,
    tables: &LookupTables,
    r: &mut ChaCha8Rng,
    first_role: ChoiceRole,
) -> core::result::Result<Vec<(String, ChoiceRole)>, SkipReason> {
    let pool = class_pool(tables, &[x, y]);
    if pool.is_empty() {
        return Err(SkipReason::InsufficientPool);
    }
    let p = pool[r.random_range(0..pool.len())];
    let q = pool[r.random_range(0..pool.len())];
    let (x, y) = (capitalize(x), capitalize(y));
    Ok(alloc::vec![
        (format!("{x} is followed by {y}."), first_role),
        (format!("{y} is followed by {x}."), ChoiceRole::Order),
        (String::from(SIMULTANEOUS), ChoiceRole::Simultaneous),
        (format!("{} is followed by {}.", capitalize(p), capitalize(q)), ChoiceRole::Unrelated),
    ])
}

fn pair_tracks(a: &SourceSample, b: &SourceSample) -> MediaTracks {
    MediaTracks {
        visual: alloc::vec![source(a), source(b)],
        audio: alloc::vec![source(a), source(b)],
    }
}

/// `a` then `b`, concatenated in time; the key names that order.
pub fn build_cot_stitch(a: &SourceSample, b: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    stitch_ok(a, b, tables)?;
    let mut r = item_rng(opts.seed, TaskKind::CotStitch, &[&a.id, &b.id]);
    let entries = order_entries(&a.class_label, &b.class_label, tables, &mut r, ChoiceRole::Key)?;
    let d = Draft {
        task: TaskKind::CotStitch,
        hosts: alloc::vec![a, b],
        question: COT_QUESTION.into(),
        category: category(a, tables),
        entries,
        key: Key::Choice,
        substituted: Vec::new(),
        media: pair_tracks(a, b),
    };
    Ok(finish(d, &mut r))
}

/// A stitch whose two audio segments are exchanged, so no listed order is right.
pub fn build_cot_swap(a: &SourceSample, b: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    swap_ok(a, b, tables)?;
    let mut r = item_rng(opts.seed, TaskKind::CotSwap, &[&a.id, &b.id]);
    let entries = order_entries(&a.class_label, &b.class_label, tables, &mut r, ChoiceRole::Original)?;
    let mut media = pair_tracks(a, b);
    media.swap_audio();
    let d = Draft {
        task: TaskKind::CotSwap,
        hosts: alloc::vec![a, b],
        question: COT_QUESTION.into(),
        category: category(a, tables),
        entries,
        key: Key::Refusal(RefusalKind::NoneOfTheAbove),
        substituted: alloc::vec!["audio"],
        media,
    };
    Ok(finish(d, &mut r))
}

/// Two events each bound to its own attribute; the prime distractor swaps
/// the attributes.
pub fn build_cat(a: &SourceSample, b: &SourceSample, tables: &LookupTables, opts: &BuildOptions) -> Built {
    cat_ok(a, b)?;
    let (x, y) = (a.event.as_ref().unwrap(), b.event.as_ref().unwrap());
    let phrase = |s1: &str, v1: &str, s2: &str, v2: &str| {
        capitalize(&format!("{} {} {} and {} {} {}.", article(s1), s1.trim(), v1.trim(), article(s2), s2.trim(), v2.trim()))
    };
    let key = phrase(&x.subject, &x.attribute, &y.subject, &y.attribute);
    let perm = phrase(&x.subject, &y.attribute, &y.subject, &x.attribute);
    if key == perm {
        return Err(SkipReason::DegeneratePermutation);
    }
    let pool = class_pool(tables, &[&a.class_label, &b.class_label]);
    if pool.is_empty() {
        return Err(SkipReason::InsufficientPool);
    }
    let mut r = item_rng(opts.seed, TaskKind::Cat, &[&a.id, &b.id]);
    let p = pool[r.random_range(0..pool.len())];
    let q = pool[r.random_range(0..pool.len())];
    let entries = alloc::vec![
        (key, ChoiceRole::Key),
        (perm, ChoiceRole::Permutation),
        (format!("{} followed by {}", capitalize(p), q.trim().to_lowercase()), ChoiceRole::Unrelated),
    ];
    let d = Draft {
        task: TaskKind::Cat,
        hosts: alloc::vec![a, b],
        question: COT_QUESTION.into(),
        category: category(a, tables),
        entries,
        key: Key::Choice,
        substituted: Vec::new(),
        media: pair_tracks(a, b),
    };
    Ok(finish(d, &mut r))
}

fn pair_check(task: TaskKind, a: &SourceSample, b: &SourceSample, tables: &LookupTables) -> core::result::Result<(), SkipReason> {
    match task {
        TaskKind::CotStitch => stitch_ok(a, b, tables),
        TaskKind::CotSwap => swap_ok(a, b, tables),
        _ => cat_ok(a, b),
    }
}

/// Builds one task over a manifest. Output order follows manifest order.
/// Pair tasks use each sample once as the first event and pick its partner
/// from a seeded permutation of the manifest.
pub fn build_task(
    task: TaskKind,
    manifest: &[SourceSample],
    tables: &LookupTables,
    opts: &BuildOptions,
) -> (Vec<BuiltItem>, Vec<Skip>) {
    let mut items = Vec::new();
    let mut skips = Vec::new();
    let skip = |s: &SourceSample, partner: Option<&SourceSample>, reason| Skip {
        task,
        sample_id: s.id.clone(),
        partner_id: partner.map(|p| p.id.clone()),
        reason,
    };
    let pair_task = matches!(task, TaskKind::CotStitch | TaskKind::CotSwap | TaskKind::Cat);
    if !pair_task {
        for s in manifest {
            let out = match task {
                TaskKind::Mcit => build_mcit(s, tables, opts),
                TaskKind::Icit => build_icit(s, tables, opts),
                TaskKind::Mvit => build_mvit(s, tables, manifest, opts),
                TaskKind::Mait => build_mait(s, tables, manifest, opts),
                TaskKind::Mvt => build_mvt(s, tables, opts),
                _ => build_mat(s, tables, opts),
            };
            match out {
                Ok(b) => items.push(b),
                Err(reason) => skips.push(skip(s, None, reason)),
            }
        }
        return (items, skips);
    }

    let aligned: Vec<Option<SkipReason>> = manifest
        .iter()
        .map(|s| if opts.alignment_filter { alignment_filter(s).reason } else { None })
        .collect();
    for (i, a) in manifest.iter().enumerate() {
        if let Some(reason) = aligned[i] {
            skips.push(skip(a, None, reason));
            continue;
        }
        if task == TaskKind::Cat && a.event.is_none() {
            skips.push(skip(a, None, SkipReason::MissingAttribute));
            continue;
        }
        let mut r = item_rng(opts.seed, task, &["partner", &a.id]);
        let mut order: Vec<usize> = (0..manifest.len()).collect();
        order.shuffle(&mut r);
        let partner = order
            .into_iter()
            .filter(|&j| j != i && aligned[j].is_none())
            .map(|j| &manifest[j])
            .find(|b| pair_check(task, a, b, tables).is_ok());
        let Some(b) = partner else {
            skips.push(skip(a, None, SkipReason::NoPartner));
            continue;
        };
        let out = match task {
            TaskKind::CotStitch => build_cot_stitch(a, b, tables, opts),
            TaskKind::CotSwap => build_cot_swap(a, b, tables, opts),
            _ => build_cat(a, b, tables, opts),
        };
        match out {
            Ok(item) => items.push(item),
            Err(reason) => skips.push(skip(a, Some(b), reason)),
        }
    }
    (items, skips)
}
