use avpref_core::benchbuilder::fixtures::{fixture_manifest, fixture_tables};
use avpref_core::benchbuilder::{build_all, render_setting, BuildOptions, BuiltItem};
use avpref_core::evalharness::fixtures::balanced_items;
use avpref_core::evalharness::{
    aggregate_accuracy, circular_eval, rotate, EvalMode, PerfectOracle, QAItem, RetryPolicy, Setting,
    NONE_OF_THE_ABOVE,
};
use avpref_core::prefcore::{robust_aggregate, Tilt};
use avpref_core::TaskKind;
use proptest::prelude::*;

fn opts(seed: u64) -> BuildOptions {
    BuildOptions {
        seed,
        alignment_filter: true,
    }
}

#[test]
fn built_items_round_trip_and_validate() {
    let (out, report) = build_all(&fixture_manifest(80, 5), &fixture_tables(), &TaskKind::ALL, Setting::Instruction, &opts(5)).unwrap();
    assert_eq!(report.counts.len(), 9);
    for (task, items) in &out {
        assert!(!items.is_empty(), "{task}");
        for b in items {
            b.item.validate().unwrap();
            assert_eq!(b.item.choices.last().unwrap().text, NONE_OF_THE_ABOVE);
            let line = serde_json::to_string(b).unwrap();
            let back: BuiltItem = serde_json::from_str(&line).unwrap();
            assert_eq!(&back, b);
        }
    }
}

#[test]
fn build_is_deterministic_and_seed_sensitive() {
    let m = fixture_manifest(60, 9);
    let t = fixture_tables();
    let a = serde_json::to_string(&build_all(&m, &t, &TaskKind::ALL, Setting::Base, &opts(1)).unwrap()).unwrap();
    let b = serde_json::to_string(&build_all(&m, &t, &TaskKind::ALL, Setting::Base, &opts(1)).unwrap()).unwrap();
    let c = serde_json::to_string(&build_all(&m, &t, &TaskKind::ALL, Setting::Base, &opts(2)).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn oracle_solves_every_built_item() {
    let (out, _) = build_all(&fixture_manifest(60, 4), &fixture_tables(), &TaskKind::ALL, Setting::Base, &opts(4)).unwrap();
    let items: Vec<QAItem> = out.into_values().flatten().map(|b| b.item).collect();
    let oracle = PerfectOracle::new(&items);
    let v: Vec<_> = items.iter().map(|i| circular_eval(i, &oracle, None, RetryPolicy::default()).unwrap()).collect();
    let r = aggregate_accuracy(&v, &items).unwrap();
    assert_eq!(r.overall(EvalMode::Circular), Some(1.0));
    assert_eq!(r.overall(EvalMode::Vanilla), Some(1.0));
}

proptest! {
    #[test]
    fn rotation_keeps_the_answer(i in 0usize..40, n in 2usize..=5, shift in 0usize..10, instr: bool) {
        let mut item = balanced_items(40, n)[i].clone();
        if instr {
            item = render_setting(&item, Setting::Instruction);
        }
        let r = rotate(&item, shift);
        prop_assert_eq!(r.correct_text(), item.correct_text());
        let mut a: Vec<_> = item.choices.iter().map(|c| c.text.clone()).collect();
        let mut b: Vec<_> = r.choices.iter().map(|c| c.text.clone()).collect();
        if instr {
            prop_assert_eq!(b.last().map(String::as_str), Some(NONE_OF_THE_ABOVE));
        }
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn instruction_rendering_is_idempotent(i in 0usize..20, n in 2usize..=4) {
        let item = balanced_items(20, n)[i].clone();
        let once = render_setting(&item, Setting::Instruction);
        prop_assert_eq!(render_setting(&once, Setting::Instruction), once.clone());
        prop_assert_eq!(once.choices.len(), n + 1);
        prop_assert_eq!(render_setting(&item, Setting::Base), item);
    }

    #[test]
    fn theorem_tilt_between_mean_and_max(v in prop::collection::vec(0.0f64..20.0, 1..30), lambda in 0.05f64..50.0) {
        let a = robust_aggregate(&v, lambda, Tilt::Theorem).unwrap();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let max = v.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(a >= mean - 1e-9 && a <= max + 1e-9);
    }
}
