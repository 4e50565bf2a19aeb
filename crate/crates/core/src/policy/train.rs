use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{cavpref_gradient, Adam, AdamConfig, PolicyError, PolicyModel, Result};
use crate::prefcore::{BetaCalibrator, Component, PolicyPair, PreferenceRecord, RobustConfig};
use crate::rng;

/// Loss above which a run is considered diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Trainable policy, its frozen reference and the optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub policy: PolicyModel,
    pub reference: PolicyModel,
    pub step: u64,
    pub optimizer: Adam,
    pub rng_seed: u64,
}

impl TrainState {
    /// The reference is a frozen copy of the initial policy.
    pub fn new(policy: PolicyModel, rng_seed: u64) -> Self {
        let mut reference = policy.clone();
        reference.id = alloc::format!("{}-ref", policy.id);
        let optimizer = Adam::new(policy.weights().len(), AdamConfig::default());
        Self {
            policy,
            reference,
            step: 0,
            optimizer,
            rng_seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Stop after this many optimizer steps, even mid-epoch.
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 1e-2,
            batch_size: 16,
            max_steps: None,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_y: f64,
    #[serde(rename = "loss_V")]
    pub loss_v: f64,
    #[serde(rename = "loss_A")]
    pub loss_a: f64,
    /// Mean per-record loss (text plus active anchors) by category.
    pub per_category: BTreeMap<String, f64>,
    /// Mean implicit reward margin `β_y·(log f_w − log f_l)`.
    pub reward_margin: f64,
}

/// Runs the optimizer over shuffled mini-batches. Deterministic given
/// `state.rng_seed`.
pub fn train(
    mut state: TrainState,
    dataset: &[PreferenceRecord],
    tc: &TrainConfig,
    cfg: &RobustConfig,
    cal: &BetaCalibrator,
) -> Result<(TrainState, Vec<StepMetrics>)> {
    if dataset.is_empty() {
        return Err(crate::prefcore::PrefError::EmptyBatch.into());
    }
    if !(tc.lr >= 0.0) || !tc.lr.is_finite() {
        return Err(PolicyError::InvalidHyper(alloc::format!("lr must be >= 0, got {}", tc.lr)));
    }
    if tc.batch_size == 0 {
        return Err(PolicyError::InvalidHyper("batch_size must be positive".into()));
    }
    cfg.validate()?;
    let dim = state.policy.dims().feature_dim;
    for r in dataset {
        r.validate(dim)?;
    }
    if state.optimizer.config != tc.adam {
        state.optimizer.config = tc.adam;
    }

    let mut trace = Vec::new();
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    'outer: for epoch in 0..tc.epochs {
        let mut r = rng::seeded(rng::derive_seed(state.rng_seed, &alloc::format!("epoch-{epoch}")));
        order.sort_unstable();
        order.shuffle(&mut r);
        for chunk in order.chunks(tc.batch_size) {
            if tc.max_steps.is_some_and(|m| state.step >= m) {
                break 'outer;
            }
            let batch: Vec<PreferenceRecord> = chunk.iter().map(|&i| dataset[i].clone()).collect();
            let g = cavpref_gradient(&state, &batch, cal, cfg)?;
            let total = g.objective.total;
            if !total.is_finite() || total.abs() > DIVERGENCE_LIMIT {
                return Err(PolicyError::Diverged {
                    step: state.step,
                    loss: total,
                });
            }
            trace.push(metrics(state.step, epoch, &batch, &g.objective));
            state.optimizer.step(state.policy.weights_mut(), &g.grad, tc.lr);
            state.step += 1;
        }
    }
    Ok((state, trace))
}

fn metrics(
    step: u64,
    epoch: usize,
    batch: &[PreferenceRecord],
    obj: &crate::prefcore::ObjectiveValue,
) -> StepMetrics {
    let mut per_record = alloc::vec![0.0; batch.len()];
    let mut margin = 0.0;
    for t in &obj.terms {
        per_record[t.record] += t.loss();
        if t.component == Component::Text {
            margin += t.margin();
        }
    }
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (rec, loss) in batch.iter().zip(&per_record) {
        let e = sums.entry(rec.category.clone()).or_insert((0.0, 0));
        e.0 += loss;
        e.1 += 1;
    }
    StepMetrics {
        step,
        epoch,
        loss_total: obj.total,
        loss_y: obj.components.y,
        loss_v: obj.components.v,
        loss_a: obj.components.a,
        per_category: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        reward_margin: margin / batch.len() as f64,
    }
}

/// Held-out sign check of the implicit reward margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub pairs: usize,
    pub positive_text: usize,
    pub anchors: usize,
    pub positive_anchor: usize,
}

impl MarginReport {
    pub fn text_fraction(&self) -> f64 {
        self.positive_text as f64 / self.pairs.max(1) as f64
    }

    pub fn anchor_fraction(&self) -> f64 {
        self.positive_anchor as f64 / self.anchors.max(1) as f64
    }
}

/// Counts records whose text margin, and whose active anchor log-ratio gaps,
/// are strictly positive.
pub fn evaluate_margins(
    policy: &PolicyModel,
    reference: &PolicyModel,
    records: &[PreferenceRecord],
) -> Result<MarginReport> {
    let pair = PolicyPair::new(policy, reference);
    let mut report = MarginReport {
        pairs: 0,
        positive_text: 0,
        anchors: 0,
        positive_anchor: 0,
    };
    for rec in records {
        report.pairs += 1;
        if pair.gap(Component::Text, rec)? > 0.0 {
            report.positive_text += 1;
        }
        for c in [Component::Visual, Component::Audio] {
            if c.is_active(rec.task_kind) {
                report.anchors += 1;
                if pair.gap(c, rec)? > 0.0 {
                    report.positive_anchor += 1;
                }
            }
        }
    }
    Ok(report)
}
