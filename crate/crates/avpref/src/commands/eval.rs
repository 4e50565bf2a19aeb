use std::collections::BTreeMap;
use std::path::PathBuf;

use avpref_core::evalharness::{
    aggregate_accuracy, circular_eval, AccuracyReport, ChoiceExtractor, CircularVerdict, ConstantResponder, EvalMode,
    LexicalExtractor, PerfectOracle, QAItem, Responder, RetryPolicy, ScriptedResponder,
};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aligned_table, Context};
use crate::client::{HttpExtractor, HttpResponder};
use crate::error::{CliError, Result};
use crate::io;

pub const REPORT_JSON: &str = "eval_report.json";
pub const REPORT_TSV: &str = "eval_report.tsv";
pub const VERDICTS_FILE: &str = "eval_verdicts.jsonl";

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Items (JSONL of built items or bare items).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// oracle | constant:<text> | scripted:<file.json> | http
    #[arg(long, default_value = "oracle")]
    pub responder: String,
    /// Second-stage extractor: none | lexical | http
    #[arg(long, default_value = "none")]
    pub extractor: String,
    /// Headline metric: circular | vanilla
    #[arg(long, default_value = "circular")]
    pub mode: EvalMode,
}

/// Saved evaluation output, read back by `report`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOutput {
    /// False when a live client took part.
    pub deterministic: bool,
    pub mode: EvalMode,
    pub responder: String,
    pub extractor: String,
    pub report: AccuracyReport,
}

/// A scripted responder file: per-item lists of pass responses.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    #[serde(default)]
    fallback: String,
    script: BTreeMap<String, Vec<String>>,
}

fn responder(spec: &str, items: &[QAItem], ctx: &Context) -> Result<(Box<dyn Responder>, bool)> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "oracle" => (Box::new(PerfectOracle::new(items)), true),
        "constant" => (Box::new(ConstantResponder(arg.to_string())), true),
        "scripted" => {
            let f: ScriptFile = io::read_json(std::path::Path::new(arg))?;
            (
                Box::new(ScriptedResponder {
                    script: f.script,
                    fallback: f.fallback,
                }),
                true,
            )
        }
        "http" => (Box::new(HttpResponder::from_env(&ctx.config.responder)?), false),
        other => return Err(CliError::validation(format!("unknown responder `{other}`"))),
    })
}

fn extractor(spec: &str, ctx: &Context) -> Result<(Option<Box<dyn ChoiceExtractor>>, bool)> {
    Ok(match spec {
        "none" => (None, true),
        "lexical" => (Some(Box::new(LexicalExtractor)), true),
        "http" => (Some(Box::new(HttpExtractor::from_env(&ctx.config.extractor)?)), false),
        other => return Err(CliError::validation(format!("unknown extractor `{other}`"))),
    })
}

pub fn run(ctx: &Context, a: &EvalArgs) -> Result<EvalOutput> {
    let items = io::read_items(&ctx.manifest(&a.manifest)?)?;
    let (resp, resp_det) = responder(&a.responder, &items, ctx)?;
    let (ext, ext_det) = extractor(&a.extractor, ctx)?;
    let retry = RetryPolicy {
        max_attempts: ctx.config.extractor.max_attempts,
    };
    let pool = ctx.config.pool()?;
    let verdicts: Vec<CircularVerdict> = pool.install(|| {
        items
            .par_iter()
            .map(|item| circular_eval(item, resp.as_ref(), ext.as_deref(), retry))
            .collect::<std::result::Result<_, _>>()
    })
    .map_err(CliError::validation)?;
    let report = aggregate_accuracy(&verdicts, &items).map_err(CliError::validation)?;

    let out = EvalOutput {
        deterministic: resp_det && ext_det,
        mode: a.mode,
        responder: a.responder.clone(),
        extractor: a.extractor.clone(),
        report,
    };
    io::write_jsonl(&ctx.path(VERDICTS_FILE), &verdicts)?;
    let mut tsv = String::new();
    if !out.deterministic {
        tsv.push_str("# non-deterministic: live client\n");
    }
    tsv.push_str(&out.report.to_tsv());
    io::write_text(&ctx.path(REPORT_TSV), &tsv)?;
    io::write_json(&ctx.path(REPORT_JSON), &out)?;
    let text = render(&out);
    io::write_text(&ctx.path("eval_summary.txt"), &text)?;
    ctx.emit(&text);
    Ok(out)
}

fn render(o: &EvalOutput) -> String {
    let mut s = String::new();
    if !o.deterministic {
        s.push_str("non-deterministic run (live client)\n");
    }
    let rows: Vec<Vec<String>> = o
        .report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.task.name().to_string(),
                r.category.clone(),
                r.n.to_string(),
                format!("{:.4}", r.circular_acc),
                format!("{:.4}", r.vanilla_acc),
            ]
        })
        .collect();
    s.push_str(&aligned_table(&["task", "category", "n", "circular_acc", "vanilla_acc"], &rows));
    if let Some(acc) = o.report.overall(o.mode) {
        s.push_str(&format!("\noverall {} accuracy: {acc:.4}\n", mode_name(o.mode)));
    }
    for w in &o.report.warnings {
        s.push_str(&format!("warning: {w}\n"));
    }
    s
}

pub fn mode_name(m: EvalMode) -> &'static str {
    match m {
        EvalMode::Circular => "circular",
        EvalMode::Vanilla => "vanilla",
    }
}
