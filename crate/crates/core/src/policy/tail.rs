use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::synthetic::{two_category_dataset, HEAD, TAIL};
use super::{train, ModelDims, PolicyError, PolicyModel, Result, TrainConfig, TrainState};
use crate::numeric::log_sigmoid;
use crate::prefcore::{BetaCalibrator, Component, PolicyPair, PreferenceRecord, RobustConfig, Tilt};
use crate::rng;

/// λ used for the mean-risk arm.
pub const BASELINE_LAMBDA: f64 = 1e6;

/// Skewed two-category experiment comparing the robust aggregation against a
/// mean-risk baseline trained from the same initialization on the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    /// Fraction of training records in the tail category.
    pub skew: f64,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
    pub dims: ModelDims,
    pub train_size: usize,
    /// Held-out records, split evenly between the two categories.
    pub heldout_size: usize,
    pub steps: u64,
    pub batch_size: usize,
    pub lr: f64,
    /// Fixed text β used for both training and held-out scoring.
    pub beta: f64,
}

impl TailSpec {
    pub fn new(skew: f64, lambda_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            skew,
            lambda_grid,
            seed,
            dims: ModelDims {
                vocab_size: 4,
                feature_dim: 3,
                context_window: 1,
            },
            train_size: 1000,
            heldout_size: 1000,
            steps: 200,
            batch_size: 1000,
            lr: 0.05,
            beta: 0.55,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.skew > 0.0 && self.skew < 1.0) {
            return Err(PolicyError::InvalidHyper(alloc::format!("skew {} outside (0, 1)", self.skew)));
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(PolicyError::InvalidHyper("lambda grid must be non-empty and positive".into()));
        }
        if self.train_size == 0 || self.heldout_size < 2 || self.steps == 0 || self.batch_size == 0 {
            return Err(PolicyError::InvalidHyper("sizes and steps must be positive".into()));
        }
        if !(0.1..=1.0).contains(&self.beta) || !(self.lr > 0.0) {
            return Err(PolicyError::InvalidHyper("beta must lie in [0.1, 1] and lr be positive".into()));
        }
        self.dims.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lambda: f64,
    pub robust_worst: f64,
    pub robust_mean: f64,
    pub robust_head: f64,
    pub robust_tail: f64,
    pub baseline_worst: f64,
    pub baseline_mean: f64,
    pub baseline_head: f64,
    pub baseline_tail: f64,
}

impl TailRow {
    /// Positive when the robust arm has the lower worst-category loss.
    pub fn worst_improvement(&self) -> f64 {
        self.baseline_worst - self.robust_worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub skew: f64,
    pub seed: u64,
    pub baseline_lambda: f64,
    pub rows: Vec<TailRow>,
}

struct ArmLoss {
    head: f64,
    tail: f64,
    mean: f64,
}

fn heldout_loss(policy: &PolicyModel, reference: &PolicyModel, heldout: &[PreferenceRecord], beta: f64) -> Result<ArmLoss> {
    let pair = PolicyPair::new(policy, reference);
    let (mut h, mut nh, mut t, mut nt) = (0.0, 0usize, 0.0, 0usize);
    for rec in heldout {
        let loss = -log_sigmoid(beta * pair.gap(Component::Text, rec)?);
        if rec.category == TAIL {
            t += loss;
            nt += 1;
        } else {
            debug_assert_eq!(rec.category, HEAD);
            h += loss;
            nh += 1;
        }
    }
    Ok(ArmLoss {
        head: h / nh as f64,
        tail: t / nt as f64,
        mean: (h + t) / (nh + nt) as f64,
    })
}

fn run_arm(spec: &TailSpec, data: &[PreferenceRecord], heldout: &[PreferenceRecord], lambda: f64) -> Result<ArmLoss> {
    let init = PolicyModel::new("tail", spec.dims, rng::derive_seed(spec.seed, "tail-embed"), 0.0)?;
    let state = TrainState::new(init, rng::derive_seed(spec.seed, "tail-order"));
    let tc = TrainConfig {
        epochs: usize::MAX,
        lr: spec.lr,
        batch_size: spec.batch_size,
        max_steps: Some(spec.steps),
        ..TrainConfig::default()
    };
    let cfg = RobustConfig {
        lambda_y: lambda,
        tilt: Tilt::Theorem,
        ..RobustConfig::default()
    };
    let cal = with_fixed_beta(spec.beta);
    let (done, _) = train(state, data, &tc, &cfg, &cal)?;
    heldout_loss(&done.policy, &done.reference, heldout, spec.beta)
}

fn with_fixed_beta(beta: f64) -> BetaCalibrator {
    let mut c = BetaCalibrator::constant();
    c.slope = 0.0;
    c.intercept = beta;
    c
}

/// Trains one mean-risk arm and one robust arm per λ, and scores both on a
/// balanced held-out set.
pub fn tail_experiment(spec: &TailSpec) -> Result<TailReport> {
    spec.validate()?;
    let data = two_category_dataset(spec.dims, spec.skew, spec.train_size, rng::derive_seed(spec.seed, "tail-train"));
    let heldout = two_category_dataset(spec.dims, 0.5, spec.heldout_size, rng::derive_seed(spec.seed, "tail-heldout"));
    let base = run_arm(spec, &data, &heldout, BASELINE_LAMBDA)?;
    let rows = spec
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let r = run_arm(spec, &data, &heldout, lambda)?;
            Ok(TailRow {
                lambda,
                robust_worst: r.head.max(r.tail),
                robust_mean: r.mean,
                robust_head: r.head,
                robust_tail: r.tail,
                baseline_worst: base.head.max(base.tail),
                baseline_mean: base.mean,
                baseline_head: base.head,
                baseline_tail: base.tail,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TailReport {
        skew: spec.skew,
        seed: spec.seed,
        baseline_lambda: BASELINE_LAMBDA,
        rows,
    })
}
