//! Line-oriented JSON records and the other on-disk formats.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use avpref_core::benchbuilder::{BuiltItem, LookupTables};
use avpref_core::evalharness::QAItem;
use avpref_core::policy::{PolicyModel, TrainState};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Reads one JSON value per non-blank line. A malformed line is a
/// validation error naming the file and line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line)
            .map_err(|e| CliError::validation(format!("{}:{}: malformed record: {e}", path.display(), i + 1)))?;
        out.push(v);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let file = create(path)?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).context("serialize record")?;
        w.write_all(b"\n").context("write record")?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).context("serialize")?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?)
}

/// Lookup tables from `.toml`, or JSON for any other extension.
pub fn read_tables(path: &Path) -> Result<LookupTables> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read tables {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// An evaluation input line: a built item with provenance, or a bare item.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ItemLine {
    Built(BuiltItem),
    Plain(QAItem),
}

pub fn read_items(path: &Path) -> Result<Vec<QAItem>> {
    Ok(read_jsonl::<ItemLine>(path)?
        .into_iter()
        .map(|l| match l {
            ItemLine::Built(b) => b.item,
            ItemLine::Plain(q) => q,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub step: u64,
    pub rng_seed: u64,
    pub policy: PolicyModel,
    pub reference: PolicyModel,
}

impl Checkpoint {
    pub fn from_state(state: &TrainState) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            step: state.step,
            rng_seed: state.rng_seed,
            policy: state.policy.clone(),
            reference: state.reference.clone(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = read_json(path)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(CliError::validation(format!(
                "{}: checkpoint version {} (expected {CHECKPOINT_VERSION})",
                path.display(),
                c.version
            )));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        fs::write(&p, "[1]\n\n[2]\n{oops\n").unwrap();
        let err = read_jsonl::<Vec<u32>>(&p).unwrap_err();
        assert!(matches!(err, CliError::Validation(ref m) if m.contains(":4:")), "{err}");
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.jsonl");
        let v = vec![vec![0.1f64, 1e-300], vec![2.0 / 3.0]];
        write_jsonl(&p, &v).unwrap();
        assert_eq!(read_jsonl::<Vec<f64>>(&p).unwrap(), v);
    }

    #[test]
    fn missing_file_is_runtime_error_with_path() {
        let err = read_tables(Path::new("/nonexistent/tables.toml")).unwrap_err();
        assert_eq!(err.exit_code(), crate::ExitCode::Runtime);
        assert!(err.to_string().contains("/nonexistent/tables.toml"));
    }
}
