use avpref_core::policy::{tail_experiment, TailReport, TailSpec};
use clap::Args;
use rayon::prelude::*;

use super::{aligned_table, Context};
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct TailArgs {
    /// Fraction of training records in the tail category.
    #[arg(long, default_value_t = 0.1)]
    pub skew: f64,
    /// Comma-separated robust temperatures to compare with the mean-risk arm.
    #[arg(long, default_value = "1.0", value_delimiter = ',')]
    pub lambda: Vec<f64>,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
}

pub fn run(ctx: &Context, a: &TailArgs) -> Result<Vec<TailReport>> {
    let seeds: Vec<u64> = (ctx.config.seed..ctx.config.seed + a.seeds).collect();
    let reports = ctx
        .config
        .pool()?
        .install(|| {
            seeds
                .par_iter()
                .map(|&seed| tail_experiment(&TailSpec::new(a.skew, a.lambda.clone(), seed)))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .map_err(CliError::validation)?;
    io::write_json(&ctx.path("tail_report.json"), &reports)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|r| {
            r.rows.iter().map(move |row| {
                vec![
                    r.seed.to_string(),
                    format!("{}", row.lambda),
                    format!("{:.4}", row.robust_worst),
                    format!("{:.4}", row.baseline_worst),
                    format!("{:.4}", row.robust_mean),
                    format!("{:.4}", row.baseline_mean),
                ]
            })
        })
        .collect();
    let text = aligned_table(
        &["seed", "lambda", "robust worst", "mean-risk worst", "robust mean", "mean-risk mean"],
        &rows,
    );
    io::write_text(&ctx.path("tail_summary.txt"), &text)?;
    ctx.emit(&text);
    Ok(reports)
}
