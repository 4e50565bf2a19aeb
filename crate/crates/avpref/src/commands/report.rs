use std::collections::BTreeSet;
use std::path::PathBuf;

use avpref_core::evalharness::ALL_CATEGORIES;
use avpref_core::policy::StepMetrics;
use avpref_core::TaskKind;
use clap::Args;

use super::eval::{mode_name, EvalOutput};
use super::{aligned_table, file_label, Context};
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Training traces (JSONL).
    #[arg(long = "trace")]
    pub traces: Vec<PathBuf>,
    /// Evaluation reports written by `eval`.
    #[arg(long = "eval")]
    pub evals: Vec<PathBuf>,
}

pub fn run(ctx: &Context, a: &ReportArgs) -> Result<String> {
    if a.traces.is_empty() && a.evals.is_empty() {
        return Err(CliError::validation("nothing to report (use --trace and/or --eval)"));
    }
    let mut text = String::new();
    if !a.traces.is_empty() {
        let mut runs = Vec::new();
        for p in &a.traces {
            runs.push((file_label(p), io::read_jsonl::<StepMetrics>(p)?));
        }
        text.push_str(&trace_table(&runs));
    }
    if !a.evals.is_empty() {
        let mut runs = Vec::new();
        for p in &a.evals {
            runs.push((file_label(p), io::read_json::<EvalOutput>(p)?));
        }
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&leaderboard(&runs));
    }
    io::write_text(&ctx.path("report.txt"), &text)?;
    ctx.emit(&text);
    Ok(text)
}

/// Final-step losses per run, then final per-category losses.
pub fn trace_table(runs: &[(String, Vec<StepMetrics>)]) -> String {
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(name, t)| match t.last() {
            Some(m) => vec![
                name.clone(),
                t.len().to_string(),
                format!("{:.4}", m.loss_total),
                format!("{:.4}", m.loss_y),
                format!("{:.4}", m.loss_v),
                format!("{:.4}", m.loss_a),
                format!("{:.4}", m.reward_margin),
            ],
            None => vec![name.clone(), "0".into(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into()],
        })
        .collect();
    let mut s = aligned_table(&["run", "steps", "loss", "loss_y", "loss_V", "loss_A", "margin"], &rows);
    let cats: BTreeSet<&String> = runs.iter().filter_map(|(_, t)| t.last()).flat_map(|m| m.per_category.keys()).collect();
    if !cats.is_empty() {
        let mut header = vec!["run"];
        header.extend(cats.iter().map(|c| c.as_str()));
        let rows: Vec<Vec<String>> = runs
            .iter()
            .filter_map(|(name, t)| t.last().map(|m| (name, m)))
            .map(|(name, m)| {
                let mut r = vec![name.clone()];
                r.extend(cats.iter().map(|c| m.per_category.get(*c).map_or("-".into(), |v| format!("{v:.4}"))));
                r
            })
            .collect();
        s.push('\n');
        s.push_str(&aligned_table(&header, &rows));
    }
    s
}

/// One row per evaluation run, one column per task, in each run's mode.
pub fn leaderboard(runs: &[(String, EvalOutput)]) -> String {
    let tasks: Vec<TaskKind> = TaskKind::ALL
        .into_iter()
        .filter(|t| runs.iter().any(|(_, o)| o.report.row(*t, ALL_CATEGORIES).is_some()))
        .collect();
    let mut header = vec!["run", "mode"];
    header.extend(tasks.iter().map(|t| t.name()));
    header.push("overall");
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(name, o)| {
            let label = if o.deterministic { name.clone() } else { format!("{name} (live)") };
            let mut r = vec![label, mode_name(o.mode).to_string()];
            for t in &tasks {
                r.push(
                    o.report
                        .row(*t, ALL_CATEGORIES)
                        .map_or("-".into(), |row| format!("{:.2}", 100.0 * row.accuracy(o.mode))),
                );
            }
            r.push(o.report.overall(o.mode).map_or("-".into(), |v| format!("{:.2}", 100.0 * v)));
            r
        })
        .collect();
    aligned_table(&header, &rows)
}
