use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{CircularVerdict, EvalError, QAItem, Result};
use crate::TaskKind;

pub const UNCATEGORIZED: &str = "uncategorized";
/// Category name of the per-task summary rows.
pub const ALL_CATEGORIES: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    #[default]
    Circular,
    Vanilla,
}

impl core::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "circular" => Ok(Self::Circular),
            "vanilla" => Ok(Self::Vanilla),
            other => Err(format!("unknown mode {other:?} (expected circular or vanilla)")),
        }
    }
}

/// Field order is the column order of every emitted table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub task: TaskKind,
    pub category: String,
    pub n: usize,
    pub circular_acc: f64,
    pub vanilla_acc: f64,
}

impl AccuracyRow {
    pub fn accuracy(&self, mode: EvalMode) -> f64 {
        match mode {
            EvalMode::Circular => self.circular_acc,
            EvalMode::Vanilla => self.vanilla_acc,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub rows: Vec<AccuracyRow>,
    pub warnings: Vec<String>,
}

impl AccuracyReport {
    pub fn row(&self, task: TaskKind, category: &str) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.task == task && r.category == category)
    }

    /// Accuracy over every verdict in the report.
    pub fn overall(&self, mode: EvalMode) -> Option<f64> {
        let all: Vec<&AccuracyRow> = self.rows.iter().filter(|r| r.category == ALL_CATEGORIES).collect();
        let n: usize = all.iter().map(|r| r.n).sum();
        (n > 0).then(|| all.iter().map(|r| r.accuracy(mode) * r.n as f64).sum::<f64>() / n as f64)
    }

    /// Tab-separated table with a header line.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("task\tcategory\tn\tcircular_acc\tvanilla_acc\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\n",
                r.task, r.category, r.n, r.circular_acc, r.vanilla_acc
            ));
        }
        s
    }
}

#[derive(Default)]
struct Tally {
    n: usize,
    solved: usize,
    first: usize,
}

impl Tally {
    fn add(&mut self, v: &CircularVerdict) {
        self.n += 1;
        self.solved += v.solved as usize;
        self.first += v.first_pass_correct() as usize;
    }

    fn row(&self, task: TaskKind, category: String) -> AccuracyRow {
        AccuracyRow {
            task,
            category,
            n: self.n,
            circular_acc: self.solved as f64 / self.n as f64,
            vanilla_acc: self.first as f64 / self.n as f64,
        }
    }
}

/// Circular and vanilla accuracy per (task, category), followed by one
/// all-category row per task.
pub fn aggregate_accuracy(verdicts: &[CircularVerdict], items: &[QAItem]) -> Result<AccuracyReport> {
    let by_id: BTreeMap<&str, &QAItem> = items.iter().map(|i| (i.id.as_str(), i)).collect();
    let mut groups: BTreeMap<(TaskKind, String), Tally> = BTreeMap::new();
    let mut totals: BTreeMap<TaskKind, Tally> = BTreeMap::new();
    let mut warnings = Vec::new();
    for v in verdicts {
        let item = by_id
            .get(v.item_id.as_str())
            .ok_or_else(|| EvalError::UnknownItem(v.item_id.clone()))?;
        let category = if item.category.trim().is_empty() {
            warnings.push(format!("item {} has no category; counted as {UNCATEGORIZED}", item.id));
            String::from(UNCATEGORIZED)
        } else {
            item.category.clone()
        };
        groups.entry((item.task_kind, category)).or_default().add(v);
        totals.entry(item.task_kind).or_default().add(v);
    }
    let mut rows: Vec<AccuracyRow> = groups.into_iter().map(|((t, c), tally)| tally.row(t, c)).collect();
    rows.extend(totals.into_iter().map(|(t, tally)| tally.row(t, ALL_CATEGORIES.into())));
    Ok(AccuracyReport { rows, warnings })
}
