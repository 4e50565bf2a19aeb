use std::path::PathBuf;

use avpref_core::policy::{evaluate_margins, train, MarginReport, PolicyError, PolicyModel, StepMetrics, TrainState};
use avpref_core::prefcore::PreferenceRecord;
use avpref_core::rng::derive_seed;
use clap::Args;
use log::info;
use serde::Serialize;

use super::{aligned_table, Context};
use crate::error::{CliError, Result};
use crate::io::{self, Checkpoint};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRACE_FILE: &str = "trace.jsonl";

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Preference dataset (JSONL).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Held-out preference records for the margin check.
    #[arg(long)]
    pub heldout: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSummary {
    pub steps: u64,
    pub final_loss: Option<f64>,
    pub margins: Option<MarginReport>,
}

pub fn run(ctx: &Context, a: &TrainArgs) -> Result<TrainSummary> {
    let cfg = &ctx.config;
    let data: Vec<PreferenceRecord> = io::read_jsonl(&ctx.manifest(&a.manifest)?)?;
    let policy = PolicyModel::new("policy", cfg.dims, derive_seed(cfg.seed, "init"), cfg.init_scale)
        .map_err(CliError::validation)?;
    let state = TrainState::new(policy, derive_seed(cfg.seed, "train"));
    let (state, trace) = train(state, &data, &cfg.train, &cfg.robust(), &cfg.calibrator()).map_err(|e| match e {
        PolicyError::Diverged { .. } => CliError::Runtime(anyhow::anyhow!("{e}")),
        other => CliError::validation(other),
    })?;
    io::write_json(&ctx.path(CHECKPOINT_FILE), &Checkpoint::from_state(&state))?;
    io::write_jsonl(&ctx.path(TRACE_FILE), &trace)?;

    let margins = match &a.heldout {
        Some(p) => {
            let held: Vec<PreferenceRecord> = io::read_jsonl(p)?;
            Some(
                evaluate_margins(&state.policy, &state.reference, &held)
                    .map_err(|e| CliError::validation(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    let summary = TrainSummary {
        steps: state.step,
        final_loss: trace.last().map(|m| m.loss_total),
        margins,
    };
    let text = render(&trace, margins.as_ref());
    io::write_text(&ctx.path("train_summary.txt"), &text)?;
    ctx.emit(&text);
    info!("trained {} steps", state.step);
    Ok(summary)
}

fn render(trace: &[StepMetrics], margins: Option<&MarginReport>) -> String {
    let mut s = super::report::trace_table(&[("run".to_string(), trace.to_vec())]);
    if let Some(m) = margins {
        s.push('\n');
        s.push_str(&aligned_table(
            &["held-out", "n", "positive"],
            &[
                vec!["text margin".into(), m.pairs.to_string(), format!("{:.4}", m.text_fraction())],
                vec!["anchor margin".into(), m.anchors.to_string(), format!("{:.4}", m.anchor_fraction())],
            ],
        ));
    }
    s
}
