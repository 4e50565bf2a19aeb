//! Acceptance suite. Prints one line per criterion and exits nonzero if any
//! criterion fails. Run with `cargo test -p avpref --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use avpref::commands::build::{self, BuildArgs};
use avpref::commands::train::{self, TrainArgs};
use avpref::commands::{parse_settings, parse_tasks, Context};
use avpref::RunConfig;
use avpref_core::benchbuilder::fixtures::{fixture_manifest, fixture_tables};
use avpref_core::benchbuilder::{alignment_filter, build_all, BuildOptions, ChoiceRole};
use avpref_core::evalharness::fixtures::{balanced_items, extraction_corpus};
use avpref_core::evalharness::{
    aggregate_accuracy, circular_eval, extract, ConstantResponder, EvalMode, LexicalExtractor, PerfectOracle,
    RetryPolicy, ScriptedResponder, Setting, Stage, Verdict,
};
use avpref_core::policy::synthetic::{separable_dataset, SyntheticSpec};
use avpref_core::policy::{evaluate_margins, tail_experiment, train, ModelDims, PolicyModel, TailSpec, TrainConfig, TrainState};
use avpref_core::prefcore::{BetaCalibrator, RobustConfig};
use avpref_core::rng;
use avpref_core::verify;
use avpref_core::TaskKind;
use rand::Rng;
use serde::Deserialize;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn dpo_identity() -> Outcome {
    let c = verify::dpo_identity_sweep(11, 1000);
    outcome(c.passed && c.cases == 1000, format!("max relative error {:.2e} (<= 1e-10)", c.worst_error))
}

fn dro_equivalence() -> Outcome {
    let c = verify::dro_equivalence(12, 200);
    outcome(
        c.passed && c.cases == 200,
        format!("max value error {:.2e} (<= 1e-6); {}", c.worst_error, c.detail.unwrap_or_default()),
    )
}

fn invariants() -> Outcome {
    let a = verify::constant_batch(13, 200);
    let b = verify::lambda_limit(13, 200);
    outcome(
        a.passed && b.passed,
        format!("constant batch {:.2e} (<= 1e-9), lambda limit {:.2e} (<= 1e-4)", a.worst_error, b.worst_error),
    )
}

fn gradients() -> Outcome {
    let mut all_kinds = true;
    for k in 0..20 {
        let (state, batch, _) = verify::toy_configuration(14, k);
        let d = state.policy.dims();
        let kinds: BTreeSet<TaskKind> = batch.iter().map(|r| r.task_kind).collect();
        let short = batch.iter().all(|r| r.win_response.len() <= 5 && r.lose_response.len() <= 5);
        all_kinds &= kinds.len() == 9 && d.vocab_size <= 8 && d.feature_dim <= 6 && short;
    }
    let c = verify::gradient_check(14, 20, &RobustConfig::default(), None);
    outcome(
        c.passed && all_kinds,
        format!("max relative error {:.2e} (<= 1e-4), all 9 kinds in every batch: {all_kinds}", c.worst_error),
    )
}

fn identity_baseline() -> Outcome {
    let c = verify::identity_baseline(15, &RobustConfig::default());
    outcome(c.passed, format!("max deviation from ln2*(1+eta+gamma) {:.2e} (<= 1e-7)", c.worst_error))
}

fn beta_calibration() -> Outcome {
    let c = verify::beta_bounds(16, 100);
    outcome(c.passed && c.cases == 100, format!("{} violations over 100 batches", c.worst_error))
}

fn tail_robustness() -> Outcome {
    let mut wins = 0;
    let mut cells = Vec::new();
    for seed in 0..5 {
        let r = match tail_experiment(&TailSpec::new(0.1, vec![1.0], seed)) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        };
        let row = &r.rows[0];
        if row.robust_worst < row.baseline_worst {
            wins += 1;
        }
        cells.push(format!("{:.3}/{:.3}", row.robust_worst, row.baseline_worst));
    }
    outcome(wins == 5, format!("robust < mean-risk worst-category loss on {wins}/5 seeds [{}]", cells.join(" ")))
}

fn training_sanity() -> Outcome {
    let dims = ModelDims {
        vocab_size: 8,
        feature_dim: 4,
        context_window: 1,
    };
    let spec = SyntheticSpec::new(dims);
    let data = separable_dataset(&spec, 360, 101);
    let heldout = separable_dataset(&spec, 180, 102);
    let state = TrainState::new(PolicyModel::new("p", dims, 103, 0.05).unwrap(), 104);
    let tc = TrainConfig {
        epochs: usize::MAX,
        lr: 1e-2,
        batch_size: 18,
        max_steps: Some(500),
        ..TrainConfig::default()
    };
    let cal = BetaCalibrator::cosine(8, 4, 105);
    let (done, trace) = match train(state, &data, &tc, &RobustConfig::default(), &cal) {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let m = evaluate_margins(&done.policy, &done.reference, &heldout).unwrap();
    outcome(
        trace.len() == 500 && m.text_fraction() >= 0.9 && m.anchor_fraction() >= 0.85,
        format!(
            "{} steps, positive text margins {:.3} (>= 0.90), positive anchor margins {:.3} (>= 0.85)",
            trace.len(),
            m.text_fraction(),
            m.anchor_fraction()
        ),
    )
}

fn circular_contract() -> Outcome {
    let retry = RetryPolicy::default();
    let items = balanced_items(200, 4);

    let mut built = Vec::new();
    let (by_task, _) = build_all(
        &fixture_manifest(120, 3),
        &fixture_tables(),
        &TaskKind::ALL,
        Setting::Instruction,
        &BuildOptions {
            seed: 3,
            alignment_filter: true,
        },
    )
    .unwrap();
    built.extend(by_task.into_values().flatten().map(|b| b.item));
    let mut oracle_ok = true;
    for set in [&items, &built] {
        let oracle = PerfectOracle::new(set);
        let v: Vec<_> = set.iter().map(|i| circular_eval(i, &oracle, None, retry).unwrap()).collect();
        let r = aggregate_accuracy(&v, set).unwrap();
        oracle_ok &= r.overall(EvalMode::Circular) == Some(1.0);
    }

    let constant = ConstantResponder("A".into());
    let v: Vec<_> = items.iter().map(|i| circular_eval(i, &constant, None, retry).unwrap()).collect();
    let r = aggregate_accuracy(&v, &items).unwrap();
    let circ = r.overall(EvalMode::Circular).unwrap();
    let van = r.overall(EvalMode::Vanilla).unwrap();

    let mut rnd = rng::seeded(909);
    let mut ordered = 0;
    for _ in 0..50 {
        let script: BTreeMap<String, Vec<String>> = items
            .iter()
            .map(|i| {
                let passes = (0..4).map(|_| ["A", "B", "C", "D"][rnd.random_range(0..4)].to_string()).collect();
                (i.id.clone(), passes)
            })
            .collect();
        let responder = ScriptedResponder {
            script,
            fallback: String::new(),
        };
        let v: Vec<_> = items.iter().map(|i| circular_eval(i, &responder, None, retry).unwrap()).collect();
        let r = aggregate_accuracy(&v, &items).unwrap();
        if r.overall(EvalMode::Circular) <= r.overall(EvalMode::Vanilla) {
            ordered += 1;
        }
    }
    outcome(
        oracle_ok && circ == 0.0 && (van - 0.25).abs() <= 0.05 && ordered == 50,
        format!(
            "oracle solves all: {oracle_ok}; constant letter circular {circ:.3} vanilla {van:.3}; circular <= vanilla on {ordered}/50"
        ),
    )
}

fn extraction() -> Outcome {
    let corpus = extraction_corpus();
    let mut agree = 0;
    let mut shirt = false;
    let mut wolf = false;
    for f in &corpus {
        let r = extract(f.response, &f.item, Some(&LexicalExtractor), RetryPolicy::default());
        if r.verdict == f.expected && r.stage == f.stage {
            agree += 1;
        }
        if f.response.contains("black color shirt") {
            shirt = r.verdict == Verdict::Matched('D');
        }
        if f.response == "It is a wolf" {
            wolf = r.verdict == Verdict::NoMatch && r.stage == Stage::Fallback;
        }
    }
    outcome(
        agree == corpus.len() && corpus.len() >= 30 && shirt && wolf,
        format!("{agree}/{} hand labels; black shirt -> D: {shirt}; wolf -> no match: {wolf}", corpus.len()),
    )
}

#[derive(Deserialize)]
struct SheetRow {
    id: String,
    score: f64,
    accepted: bool,
}

fn builder_invariants() -> Outcome {
    let manifest = fixture_manifest(500, 7);
    let tables = fixture_tables();
    let opts = BuildOptions {
        seed: 7,
        alignment_filter: true,
    };
    let (out, _) = build_all(&manifest, &tables, &TaskKind::ALL, Setting::Base, &opts).unwrap();
    let by_id: BTreeMap<&str, _> = manifest.iter().map(|s| (s.id.as_str(), s)).collect();
    let same = |a: &str, b: &str| a.trim().eq_ignore_ascii_case(b.trim());

    let mut mcit_leaks = 0;
    for b in &out[&TaskKind::Mcit] {
        let answer = &by_id[b.provenance.sources[0].as_str()].source_qa.as_ref().unwrap().answer;
        mcit_leaks += b.item.choices.iter().filter(|c| same(&c.text, answer)).count();
    }
    let mut icit_related = 0;
    for b in &out[&TaskKind::Icit] {
        let class = &by_id[b.provenance.sources[0].as_str()].class_label;
        for (c, role) in b.item.choices.iter().zip(&b.provenance.choice_roles) {
            if *role != ChoiceRole::Refusal && !tables.is_unrelated(class, &c.text.to_lowercase()) {
                icit_related += 1;
            }
        }
    }
    let words = |s: &str| {
        let mut w: Vec<String> = s
            .split_whitespace()
            .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .collect();
        w.sort();
        w
    };
    let mut bad_anagrams = 0;
    let mut permutations = 0;
    for b in &out[&TaskKind::Cat] {
        let key = b.item.correct_text().unwrap();
        for (c, role) in b.item.choices.iter().zip(&b.provenance.choice_roles) {
            if *role == ChoiceRole::Permutation {
                permutations += 1;
                if words(&c.text) != words(key) || c.text == key {
                    bad_anagrams += 1;
                }
            }
        }
    }
    let sheet: Vec<SheetRow> = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/alignment_sheet.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let mut sheet_mismatch = usize::from(sheet.len() != manifest.len());
    let mut worst_score = 0.0f64;
    for (s, row) in manifest.iter().zip(&sheet) {
        let d = alignment_filter(s);
        if d.sample_id != row.id || d.accepted != row.accepted {
            sheet_mismatch += 1;
        }
        worst_score = worst_score.max((d.score - row.score).abs());
    }
    let cat_items = out[&TaskKind::Cat].len();
    outcome(
        mcit_leaks == 0 && icit_related == 0 && bad_anagrams == 0 && permutations == cat_items && cat_items > 0 && sheet_mismatch == 0,
        format!(
            "MCIT leaks {mcit_leaks}; ICIT related options {icit_related}; CAT permutation distractors {permutations} over {cat_items} items, {bad_anagrams} not anagrams; alignment decisions differing from sheet {sheet_mismatch} (max score gap {worst_score:.1e})"
        ),
    )
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let inputs = tempfile::tempdir().unwrap();
    let manifest = inputs.path().join("samples.jsonl");
    let prefs = inputs.path().join("prefs.jsonl");
    let tables = inputs.path().join("tables.toml");
    avpref::io::write_jsonl(&manifest, &fixture_manifest(200, 21)).unwrap();
    avpref::io::write_text(&tables, &toml::to_string(&fixture_tables()).unwrap()).unwrap();
    let mut config = RunConfig {
        seed: 21,
        ..RunConfig::default()
    };
    config.train.epochs = 2;
    avpref::io::write_jsonl(&prefs, &separable_dataset(&SyntheticSpec::new(config.dims), 200, 22)).unwrap();

    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let ctx = Context::new(config.clone(), dir.path());
        build::run(
            &ctx,
            &BuildArgs {
                manifest: Some(manifest.clone()),
                tables: Some(tables.clone()),
                tasks: parse_tasks("all").unwrap(),
                setting: parse_settings("both").unwrap(),
                no_alignment_filter: false,
            },
        )
        .unwrap();
        train::run(
            &ctx,
            &TrainArgs {
                manifest: Some(prefs.clone()),
                heldout: None,
            },
        )
        .unwrap();
        dir_bytes(dir.path())
    };
    let (a, b) = (run_once(), run_once());
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    outcome(
        a.len() >= 20 && a.keys().eq(b.keys()) && differing.is_empty(),
        format!("{} output files, {} differ between runs", a.len(), differing.len()),
    )
}

fn main() {
    type Criterion = (&'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 12] = [
        ("preference loss identity", 1, dpo_identity),
        ("robust aggregate equals worst-case expectation", 30, dro_equivalence),
        ("constant-batch and lambda-limit invariants", 1, invariants),
        ("analytic gradient vs finite differences", 60, gradients),
        ("identity-policy baseline", 1, identity_baseline),
        ("beta calibration bounds and monotonicity", 1, beta_calibration),
        ("tail robustness on skewed categories", 60, tail_robustness),
        ("training sanity on separable data", 120, training_sanity),
        ("circular evaluation contract", 10, circular_contract),
        ("choice extraction agreement", 1, extraction),
        ("benchmark builder invariants", 10, builder_invariants),
        ("build and train determinism", 120, determinism),
    ];
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        if !args.is_empty() && !args.iter().any(|a| name.contains(a.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(*budget);
        let ok = o.passed && in_time;
        failures += usize::from(!ok);
        println!(
            "criterion {:>2} {} {name}: {} [{:.2}s of {budget}s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            o.detail,
            took.as_secs_f64()
        );
    }
    println!("{} failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
