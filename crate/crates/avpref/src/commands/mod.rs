//! Subcommands. Each takes the resolved context plus its own flags and
//! writes its artifacts under the output directory.

use std::path::{Path, PathBuf};

use avpref_core::evalharness::Setting;
use avpref_core::prefcore::Tilt;
use avpref_core::TaskKind;
use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub mod build;
pub mod eval;
pub mod report;
pub mod synth;
pub mod tail;
pub mod train;
pub mod verify;

#[derive(Debug, Parser)]
#[command(name = "avpref", version, about = "Audio-visual preference optimization toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// pseudocode | theorem
    #[arg(long, global = true)]
    pub tilt: Option<Tilt>,
    /// Maximum worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build benchmark items from a sample manifest.
    Build(build::BuildArgs),
    /// Train a toy policy on a preference dataset.
    Train(train::TrainArgs),
    /// Score a responder on multiple-choice items.
    Eval(eval::EvalArgs),
    /// Run the oracle battery.
    Verify(verify::VerifyArgs),
    /// Summarize training traces and evaluation reports.
    Report(report::ReportArgs),
    /// Compare robust and mean-risk training on a skewed two-category set.
    Tail(tail::TailArgs),
    /// Write synthetic inputs for the other subcommands.
    Synth(synth::SynthArgs),
}

/// Configuration after flags are applied, plus the output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    /// Print summaries to stdout as well as writing them.
    pub echo: bool,
}

impl Context {
    pub fn resolve(g: &GlobalArgs) -> Result<Self> {
        let mut config = match &g.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = g.seed {
            config.seed = s;
        }
        if let Some(t) = g.tilt {
            config.tilt = t;
        }
        if let Some(p) = g.parallelism {
            config.parallelism = p;
        }
        if let Some(o) = &g.out {
            config.paths.out = Some(o.clone());
        }
        config.validate()?;
        let out = config.paths.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { config, out, echo: true })
    }

    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        Self {
            config,
            out: out.into(),
            echo: false,
        }
    }

    pub fn emit(&self, text: &str) {
        if self.echo {
            print!("{text}");
        }
    }

    pub fn manifest(&self, flag: &Option<PathBuf>) -> Result<PathBuf> {
        flag.clone()
            .or_else(|| self.config.paths.manifest.clone())
            .ok_or_else(|| CliError::validation("no input given (use --manifest or paths.manifest)"))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let ctx = Context::resolve(&cli.global)?;
    match cli.command {
        Command::Build(a) => build::run(&ctx, &a).map(|_| ()),
        Command::Train(a) => train::run(&ctx, &a).map(|_| ()),
        Command::Eval(a) => eval::run(&ctx, &a).map(|_| ()),
        Command::Verify(a) => verify::run(&ctx, &a).map(|_| ()),
        Command::Report(a) => report::run(&ctx, &a).map(|_| ()),
        Command::Tail(a) => tail::run(&ctx, &a).map(|_| ()),
        Command::Synth(a) => synth::run(&ctx, &a),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskList(pub Vec<TaskKind>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SettingList(pub Vec<Setting>);

/// `all`, empty, or a comma-separated list of task names.
pub fn parse_tasks(s: &str) -> std::result::Result<TaskList, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("all") {
        return Ok(TaskList(TaskKind::ALL.to_vec()));
    }
    let mut out: Vec<TaskKind> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let t: TaskKind = part.parse().map_err(|e| format!("{e}"))?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(TaskList(out))
}

/// `base`, `instruction`, `both`, or a comma-separated list.
pub fn parse_settings(s: &str) -> std::result::Result<SettingList, String> {
    if s.trim().eq_ignore_ascii_case("both") {
        return Ok(SettingList(vec![Setting::Base, Setting::Instruction]));
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: Setting = part.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err("no setting given".into());
    }
    Ok(SettingList(out))
}

/// Left-aligned first column, right-aligned others.
pub fn aligned_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.chars().count());
        }
    }
    let fmt_row = |cells: Vec<&str>| {
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            let pad = widths[i] - c.chars().count();
            if i == 0 {
                line.push_str(c);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(c);
            }
        }
        line.trim_end().to_string() + "\n"
    };
    let mut s = fmt_row(header.to_vec());
    s.push_str(&fmt_row(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        s.push_str(&fmt_row(r.iter().map(String::as_str).collect()));
    }
    s
}

pub fn file_label(p: &Path) -> String {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match p.parent().and_then(|d| d.file_name()) {
        Some(d) => format!("{}/{stem}", d.to_string_lossy()),
        None => stem,
    }
}
