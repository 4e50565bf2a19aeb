use std::path::Path;
use std::process::{Command, Output};

fn avpref(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avpref")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth_samples(dir: &Path, n: usize) {
    let o = avpref(&["--out", s(dir), "synth", "samples", "--n", &n.to_string()]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn build_all_tasks_writes_nine_manifests() {
    let d = tempfile::tempdir().unwrap();
    synth_samples(d.path(), 40);
    let out = d.path().join("built");
    let o = avpref(&[
        "--out",
        s(&out),
        "build",
        "--manifest",
        s(&d.path().join("samples.jsonl")),
        "--tables",
        s(&d.path().join("tables.toml")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifests: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with("_base.jsonl"))
        .collect();
    assert_eq!(manifests.len(), 9);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("build_report.json")).unwrap()).unwrap();
    let counts = report["report"]["counts"].as_object().unwrap();
    assert_eq!(counts.len(), 9);
    for (task, n) in counts {
        let slug = task.to_lowercase().replace('-', "_");
        let lines = std::fs::read_to_string(out.join(format!("{slug}_base.jsonl"))).unwrap().lines().count();
        assert_eq!(n.as_u64().unwrap() as usize, lines, "{task}");
        assert!(lines > 0, "{task}");
    }
}

#[test]
fn empty_task_list_is_a_no_op() {
    let d = tempfile::tempdir().unwrap();
    let o = avpref(&["--out", s(d.path()), "build", "--tasks", "", "--manifest", "/nope.jsonl", "--tables", "/nope.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("build_report.json")).unwrap()).unwrap();
    assert!(report["report"]["counts"].as_object().unwrap().is_empty());
    assert!(report["files"].as_array().unwrap().is_empty());
}

#[test]
fn unreadable_tables_exit_with_path() {
    let d = tempfile::tempdir().unwrap();
    synth_samples(d.path(), 10);
    let o = avpref(&[
        "--out",
        s(d.path()),
        "build",
        "--manifest",
        s(&d.path().join("samples.jsonl")),
        "--tables",
        "/definitely/missing/tables.toml",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/definitely/missing/tables.toml"));
}

#[test]
fn malformed_manifest_line_aborts_with_line_number() {
    let d = tempfile::tempdir().unwrap();
    synth_samples(d.path(), 5);
    let p = d.path().join("samples.jsonl");
    let mut text = std::fs::read_to_string(&p).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.insert(2, "{\"id\": \"broken\"");
    text = lines.join("\n");
    std::fs::write(&p, text).unwrap();
    let o = avpref(&["--out", s(d.path()), "build", "--manifest", s(&p), "--tables", s(&d.path().join("tables.toml"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("samples.jsonl:3:"), "{}", stderr(&o));
}

#[test]
fn verify_passes_on_fresh_build() {
    let d = tempfile::tempdir().unwrap();
    let o = avpref(&["--out", s(d.path()), "verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ledger = std::fs::read_to_string(d.path().join("verify_ledger.jsonl")).unwrap();
    assert_eq!(ledger.lines().count(), 8);
    for line in ledger.lines() {
        let c: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(c["passed"], true, "{line}");
        assert!(c["worst_error"].is_number());
    }
}

#[test]
fn planted_tilt_fault_is_named() {
    let d = tempfile::tempdir().unwrap();
    let o = avpref(&["--out", s(d.path()), "verify", "--inject-fault", "tilt-mismatch"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("tilt_convention"));
    let ledger = std::fs::read_to_string(d.path().join("verify_ledger.jsonl")).unwrap();
    let failing: Vec<String> = ledger
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failing, ["tilt_convention"]);
}

#[test]
fn zero_audio_lambda_fails_before_any_check() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "lambdas = [1.0, 1.0, 0.0]\n").unwrap();
    let o = avpref(&["--config", s(&cfg), "--out", s(d.path()), "verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!d.path().join("verify_ledger.jsonl").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "seed = 1\n[train]\nepochs = 1\nlr = 0.1\nbatch_size = 2\nwarmup = 3\n").unwrap();
    let o = avpref(&["--config", s(&cfg), "verify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("warmup"));
}

#[test]
fn eval_oracle_and_report() {
    let d = tempfile::tempdir().unwrap();
    synth_samples(d.path(), 30);
    let built = d.path().join("built");
    let o = avpref(&[
        "--out",
        s(&built),
        "build",
        "--manifest",
        s(&d.path().join("samples.jsonl")),
        "--tables",
        s(&d.path().join("tables.toml")),
        "--tasks",
        "MCIT,CAT",
        "--setting",
        "instruction",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ev = d.path().join("eval");
    let o = avpref(&["--out", s(&ev), "--parallelism", "2", "eval", "--manifest", s(&built.join("cat_instruction.jsonl"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tsv = std::fs::read_to_string(ev.join("eval_report.tsv")).unwrap();
    assert!(tsv.starts_with("task\tcategory\tn\tcircular_acc\tvanilla_acc\n"));
    let all = tsv.lines().find(|l| l.starts_with("CAT\tall\t")).unwrap();
    assert!(all.ends_with("\t1.0000\t1.0000"), "{all}");
    let verdicts = std::fs::read_to_string(ev.join("eval_verdicts.jsonl")).unwrap();
    assert!(verdicts.lines().count() > 0);

    let rep = d.path().join("rep");
    let o = avpref(&["--out", s(&rep), "report", "--eval", s(&ev.join("eval_report.json"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("CAT") && text.contains("100.00"), "{text}");
}

#[test]
fn http_responder_needs_its_endpoint() {
    let d = tempfile::tempdir().unwrap();
    let items = d.path().join("items.jsonl");
    std::fs::write(&items, "").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_avpref"))
        .args(["--out", s(d.path()), "eval", "--manifest", s(&items), "--responder", "http"])
        .env_remove("AVPREF_RESPONDER_URL")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("AVPREF_RESPONDER_URL"));
}

#[test]
fn train_then_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "seed = 4\n[train]\nepochs = 3\nlr = 0.02\nbatch_size = 16\n").unwrap();
    let o = avpref(&["--config", s(&cfg), "--out", s(d.path()), "synth", "prefs", "--n", "96"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = d.path().join("run");
    let o = avpref(&[
        "--config",
        s(&cfg),
        "--out",
        s(&run),
        "train",
        "--manifest",
        s(&d.path().join("train.jsonl")),
        "--heldout",
        s(&d.path().join("heldout.jsonl")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(run.join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 18);
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    for key in ["step", "loss_total", "loss_y", "loss_V", "loss_A", "per_category"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    avpref::io::Checkpoint::load(&run.join("checkpoint.json")).unwrap();

    let o = avpref(&["--out", s(d.path()), "report", "--trace", s(&run.join("trace.jsonl"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("run/trace"));
}

#[test]
fn bad_flag_values_are_validation_errors() {
    assert_eq!(avpref(&["--tilt", "sideways", "verify"]).status.code(), Some(1));
    assert_eq!(avpref(&["build", "--tasks", "NOPE"]).status.code(), Some(1));
    assert_eq!(avpref(&["eval", "--mode", "loose"]).status.code(), Some(1));
}
