//! A small synthetic world of sound classes, lookup tables and samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::{EventAnnotation, LookupTables, PrefixRule, SourceQa, SourceSample};
use crate::rng;

const BUCKETS: &[(&str, &[&str])] = &[
    ("instrument", &["guitar", "piano", "violin", "flute", "erhu", "drum", "trumpet", "cello"]),
    ("animal", &["dog", "cat", "cow", "rooster", "goat", "bird"]),
    ("vehicle", &["car", "helicopter", "ambulance", "train", "aeroplane"]),
    ("household", &["door", "doorbell", "toilet flush", "sewing machine", "blender"]),
    ("human", &["speech", "crowd", "laughter", "whistle"]),
    ("object", &["napkin", "container", "calculator", "stool", "book", "chair", "wok", "blanket"]),
];

const EVENTS: &[(&str, &str, &str)] = &[
    ("dog", "dog", "barks"),
    ("cat", "cat", "meows"),
    ("cow", "cow", "moos"),
    ("rooster", "rooster", "crows"),
    ("goat", "goat", "bleats"),
    ("bird", "bird", "chirps"),
    ("crowd", "crowd", "cheers"),
    ("speech", "man", "speaks"),
    ("laughter", "baby", "laughs"),
    ("car", "car", "honks"),
    ("doorbell", "bell", "rings"),
    ("door", "door", "slams"),
];

const T3: &[(&str, &[&str])] = &[
    ("Count", &["Zero", "One", "Two", "Three", "Five", "Six", "More than ten"]),
    ("Localization", &["Left", "Right", "Middle", "Top", "Bottom", "Indoor", "Outdoor"]),
    ("Existential", &["Yes", "No", "Guitar", "Piano", "Violin", "Flute"]),
    ("Temporal", &["Guitar", "Piano", "Violin", "Flute", "Erhu", "Drum", "Trumpet", "Cello"]),
    ("World Knowledge", &["Brown", "Black", "White", "Red", "Wood", "Metal"]),
];

fn question(category: &str, class: &str) -> String {
    match category {
        "Count" => format!("How many sounding {class} in the video?"),
        "Localization" => format!("Where is the {class}?"),
        "Existential" => format!("Is there a {class} sound?"),
        "Temporal" => format!("Which sounds at the same time as the {class}?"),
        _ => format!("What is the {class} made of?"),
    }
}

fn set(xs: impl IntoIterator<Item = impl Into<String>>) -> BTreeSet<String> {
    xs.into_iter().map(Into::into).collect()
}

/// T1 maps every sounding class to all classes outside its bucket.
pub fn fixture_tables() -> LookupTables {
    let mut t1 = BTreeMap::new();
    let mut t2 = BTreeMap::new();
    for (bucket, members) in BUCKETS {
        t2.insert(String::from(*bucket), set(members.iter().copied()));
        if *bucket == "object" {
            continue;
        }
        for m in *members {
            let others = BUCKETS
                .iter()
                .filter(|(b, _)| b != bucket)
                .flat_map(|(_, ms)| ms.iter().copied());
            t1.insert(String::from(*m), set(others));
        }
    }
    let t3 = T3.iter().map(|(k, v)| (String::from(*k), set(v.iter().copied()))).collect();
    let category_prefixes = alloc::vec![
        PrefixRule {
            prefix: "How many".into(),
            category: "Count".into(),
        },
        PrefixRule {
            prefix: "Where".into(),
            category: "Localization".into(),
        },
    ];
    LookupTables {
        t1,
        t2,
        t3,
        category_prefixes,
    }
}

/// `n` samples over the sounding classes. Roughly one in ten has an audio
/// embedding unrelated to its label and fails the alignment filter.
pub fn fixture_manifest(n: usize, seed: u64) -> Vec<SourceSample> {
    const DIM: usize = 8;
    let mut world = rng::seeded(rng::derive_seed(seed, "fixture-world"));
    let sounding: Vec<(&str, &str)> = BUCKETS
        .iter()
        .filter(|(b, _)| *b != "object")
        .flat_map(|(b, ms)| ms.iter().map(move |m| (*b, *m)))
        .collect();
    let protos: Vec<Vec<f64>> = sounding
        .iter()
        .map(|_| (0..DIM).map(|_| world.random_range(-1.0..1.0)).collect())
        .collect();
    let mut r = rng::seeded(rng::derive_seed(seed, "fixture-samples"));
    (0..n)
        .map(|i| {
            let k = i % sounding.len();
            let (bucket, class) = sounding[k];
            // Every fifth sample leaves its category to the prefix rules.
            let unlabeled = i % 5 == 4;
            let (cat, answers) = if unlabeled { T3[0] } else { T3[(i / sounding.len() + i) % T3.len()] };
            let answer = answers[r.random_range(0..answers.len())];
            let jitter = |r: &mut rng::ChaCha8Rng, p: &[f64]| -> Vec<f64> {
                p.iter().map(|x| x + r.random_range(-0.15..0.15)).collect()
            };
            let label_embedding = protos[k].clone();
            let visual_embedding = jitter(&mut r, &protos[k]);
            let audio_embedding = if i % 10 == 7 {
                (0..DIM).map(|_| r.random_range(-1.0..1.0)).collect()
            } else {
                jitter(&mut r, &protos[k])
            };
            let options = if i % 2 == 0 {
                let mut o: Vec<String> = answers.iter().take(4).map(|s| String::from(*s)).collect();
                if !o.iter().any(|x| x == answer) {
                    o[0] = answer.into();
                }
                o
            } else {
                Vec::new()
            };
            let event = EVENTS.iter().find(|e| e.0 == class).map(|e| EventAnnotation {
                subject: e.1.into(),
                attribute: e.2.into(),
            });
            SourceSample {
                id: format!("s{i:04}"),
                media_ref: format!("media/{class}/{i:04}.mp4").replace(' ', "_"),
                visual_embedding,
                audio_embedding,
                label_embedding,
                class_label: class.into(),
                supercategory: bucket.into(),
                question_category: if unlabeled { String::new() } else { cat.into() },
                source_qa: Some(SourceQa {
                    question: question(cat, class),
                    answer: answer.into(),
                    options,
                }),
                event,
                requires_both: i % 3 != 0,
            }
        })
        .collect()
}
