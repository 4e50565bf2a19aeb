use std::collections::BTreeMap;
use std::path::PathBuf;

use avpref_core::benchbuilder::{build_all, BuildOptions, BuildReport, SourceSample};
use avpref_core::evalharness::Setting;
use avpref_core::TaskKind;
use clap::Args;
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::{aligned_table, parse_settings, parse_tasks, Context, SettingList, TaskList};
use crate::error::{CliError, Result};
use crate::io;

pub const REPORT_FILE: &str = "build_report.json";

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    /// Sample manifest (JSONL).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Lookup tables (TOML or JSON).
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// `all` or a comma-separated list such as `MCIT,CAT`.
    #[arg(long, default_value = "all", value_parser = parse_tasks)]
    pub tasks: TaskList,
    /// base | instruction | both
    #[arg(long, default_value = "base", value_parser = parse_settings)]
    pub setting: SettingList,
    /// Keep misaligned samples in the compositional tasks.
    #[arg(long)]
    pub no_alignment_filter: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildSummary {
    pub seed: u64,
    pub settings: Vec<Setting>,
    pub report: BuildReport,
    pub files: Vec<String>,
}

pub fn output_name(task: TaskKind, setting: Setting) -> String {
    format!("{}_{setting}.jsonl", task.slug())
}

pub fn run(ctx: &Context, a: &BuildArgs) -> Result<BuildSummary> {
    let tasks = &a.tasks.0;
    let settings = a.setting.0.clone();
    if tasks.is_empty() {
        let summary = BuildSummary {
            seed: ctx.config.seed,
            settings,
            report: BuildReport::default(),
            files: Vec::new(),
        };
        io::write_json(&ctx.path(REPORT_FILE), &summary)?;
        return Ok(summary);
    }
    let tables_path = a
        .tables
        .clone()
        .or_else(|| ctx.config.paths.tables.clone())
        .ok_or_else(|| CliError::validation("no tables given (use --tables or paths.tables)"))?;
    let tables = io::read_tables(&tables_path)?;
    let manifest_path = ctx.manifest(&a.manifest)?;
    let manifest: Vec<SourceSample> = io::read_jsonl(&manifest_path)?;
    let opts = BuildOptions {
        seed: ctx.config.seed,
        alignment_filter: !a.no_alignment_filter,
    };

    let jobs: Vec<(TaskKind, Setting)> = tasks.iter().flat_map(|&t| settings.iter().map(move |&s| (t, s))).collect();
    let pool = ctx.config.pool()?;
    let results = pool.install(|| {
        jobs.par_iter()
            .map(|&(t, s)| build_all(&manifest, &tables, &[t], s, &opts).map(|(items, rep)| (t, s, items, rep)))
            .collect::<Vec<_>>()
    });

    let mut report = BuildReport::default();
    let mut files = Vec::new();
    for r in results {
        let (task, setting, mut items, rep) = r.map_err(CliError::validation)?;
        // Skips do not depend on the setting; count them once.
        if setting == settings[0] {
            report.counts.extend(rep.counts);
            for (k, v) in rep.skip_reasons {
                *report.skip_reasons.entry(k).or_default() += v;
            }
            report.skipped.extend(rep.skipped);
        }
        let built = items.remove(&task).unwrap_or_default();
        let name = output_name(task, setting);
        io::write_jsonl(&ctx.path(&name), &built)?;
        info!("{name}: {} items", built.len());
        files.push(name);
    }

    let summary = BuildSummary {
        seed: ctx.config.seed,
        settings,
        report,
        files,
    };
    io::write_json(&ctx.path(REPORT_FILE), &summary)?;
    let text = render(&summary.report);
    io::write_text(&ctx.path("build_report.txt"), &text)?;
    ctx.emit(&text);
    Ok(summary)
}

fn render(r: &BuildReport) -> String {
    let rows: Vec<Vec<String>> = r.counts.iter().map(|(t, n)| vec![t.name().to_string(), n.to_string()]).collect();
    let mut s = aligned_table(&["task", "items"], &rows);
    if !r.skip_reasons.is_empty() {
        let mut hist: BTreeMap<&str, usize> = BTreeMap::new();
        for (k, v) in &r.skip_reasons {
            *hist.entry(k.code()).or_default() += v;
        }
        let rows: Vec<Vec<String>> = hist.iter().map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
        s.push('\n');
        s.push_str(&aligned_table(&["skip reason", "samples"], &rows));
    }
    s
}
