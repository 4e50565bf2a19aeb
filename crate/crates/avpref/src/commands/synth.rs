use avpref_core::benchbuilder::fixtures::{fixture_manifest, fixture_tables};
use avpref_core::policy::synthetic::{separable_dataset, SyntheticSpec};
use avpref_core::rng::derive_seed;
use clap::{Args, ValueEnum};

use super::Context;
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// `samples.jsonl` and `tables.toml` for `build`.
    Samples,
    /// `train.jsonl` and `heldout.jsonl` preference records for `train`.
    Prefs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(value_enum)]
    pub kind: SynthKind,
    /// Number of samples, or of training records.
    #[arg(long, default_value_t = 40)]
    pub n: usize,
}

pub fn run(ctx: &Context, a: &SynthArgs) -> Result<()> {
    let seed = ctx.config.seed;
    match a.kind {
        SynthKind::Samples => {
            io::write_jsonl(&ctx.path("samples.jsonl"), &fixture_manifest(a.n, seed))?;
            let tables = toml::to_string(&fixture_tables()).map_err(|e| CliError::Runtime(e.into()))?;
            io::write_text(&ctx.path("tables.toml"), &tables)?;
        }
        SynthKind::Prefs => {
            let spec = SyntheticSpec::new(ctx.config.dims);
            io::write_jsonl(&ctx.path("train.jsonl"), &separable_dataset(&spec, a.n, derive_seed(seed, "train-set")))?;
            io::write_jsonl(
                &ctx.path("heldout.jsonl"),
                &separable_dataset(&spec, a.n.div_ceil(2), derive_seed(seed, "heldout-set")),
            )?;
        }
    }
    Ok(())
}
