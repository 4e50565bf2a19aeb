use avpref_core::verify::{run_battery, Fault, VerifyConfig, VerifyLedger};
use clap::{Args, ValueEnum};

use super::{aligned_table, Context};
use crate::error::{CliError, Result};
use crate::io;

pub const LEDGER_FILE: &str = "verify_ledger.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    TiltMismatch,
    GradientCorruption,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Plant a known defect to confirm the battery catches it.
    #[arg(long, value_enum)]
    pub inject_fault: Option<FaultArg>,
}

/// Runs the battery, writes the ledger, and fails with a verification
/// error if any check fails.
pub fn run(ctx: &Context, a: &VerifyArgs) -> Result<VerifyLedger> {
    let cfg = VerifyConfig {
        seed: ctx.config.seed,
        robust: ctx.config.robust(),
        fault: a.inject_fault.map(|f| match f {
            FaultArg::TiltMismatch => Fault::TiltMismatch,
            FaultArg::GradientCorruption => Fault::GradientCorruption,
        }),
        ..VerifyConfig::default()
    };
    let ledger = run_battery(&cfg).map_err(CliError::validation)?;
    io::write_jsonl(&ctx.path(LEDGER_FILE), &ledger.checks)?;
    let text = render(&ledger);
    io::write_text(&ctx.path("verify_summary.txt"), &text)?;
    ctx.emit(&text);
    if ledger.all_passed() {
        Ok(ledger)
    } else {
        let names: Vec<&str> = ledger.failing().map(|c| c.name.as_str()).collect();
        Err(CliError::Verification(format!("failing checks: {}", names.join(", "))))
    }
}

fn render(l: &VerifyLedger) -> String {
    let rows: Vec<Vec<String>> = l
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
                c.cases.to_string(),
                format!("{:.3e}", c.worst_error),
                if c.tolerance == 0.0 { "0".into() } else { format!("{:.0e}", c.tolerance) },
                c.detail.clone().unwrap_or_default(),
            ]
        })
        .collect();
    aligned_table(&["check", "result", "cases", "worst", "tolerance", "detail"], &rows)
}
