use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    check_beta, robust_aggregate_with_grad, BatchBetas, BetaCalibrator, Component, ConditionalPolicy,
    PolicyPair, PrefError, PreferenceRecord, Result, RobustConfig, Tilt,
};
use crate::numeric::{log_sigmoid, sigmoid};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Components {
    pub y: f64,
    pub v: f64,
    pub a: f64,
}

/// One log-sigmoid comparison inside the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonTerm {
    /// Index into the batch.
    pub record: usize,
    pub component: Component,
    pub beta: f64,
    /// Log-ratio gap between the preferred and dispreferred side.
    pub gap: f64,
    /// `log σ(β·gap)`.
    pub log_sigmoid: f64,
    /// `∂ total / ∂ gap`.
    pub sensitivity: f64,
}

impl ComparisonTerm {
    /// Non-negative per-sample loss `−log σ(β·gap)`.
    pub fn loss(&self) -> f64 {
        -self.log_sigmoid
    }

    /// Implicit reward margin `β·gap`.
    pub fn margin(&self) -> f64 {
        self.beta * self.gap
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    pub components: Components,
    pub terms: Vec<ComparisonTerm>,
}

impl ObjectiveValue {
    pub fn terms_for(&self, component: Component) -> impl Iterator<Item = &ComparisonTerm> {
        self.terms.iter().filter(move |t| t.component == component)
    }
}

fn validate_batch(batch: &[PreferenceRecord]) -> Result<()> {
    let first = batch.first().ok_or(PrefError::EmptyBatch)?;
    let dim = first.visual_win.len();
    batch.iter().try_for_each(|r| r.validate(dim))
}

/// Calibrates β on the batch, then evaluates the combined objective
/// `R_y + η·R_V + γ·R_A`.
pub fn cavpref_objective<P: ConditionalPolicy + ?Sized>(
    pair: PolicyPair<'_, P>,
    batch: &[PreferenceRecord],
    cal: &BetaCalibrator,
    cfg: &RobustConfig,
) -> Result<ObjectiveValue> {
    validate_batch(batch)?;
    let betas = cal.batch_betas(batch)?;
    evaluate_with_betas(pair, batch, &betas, cfg)
}

/// The combined objective with β supplied by the caller.
///
/// Each anchor family is aggregated only over the records whose task kind
/// switches it on; an empty family contributes exactly zero.
pub fn evaluate_with_betas<P: ConditionalPolicy + ?Sized>(
    pair: PolicyPair<'_, P>,
    batch: &[PreferenceRecord],
    betas: &BatchBetas,
    cfg: &RobustConfig,
) -> Result<ObjectiveValue> {
    validate_batch(batch)?;
    cfg.validate()?;
    if betas.y.len() != batch.len() || betas.v.len() != batch.len() || betas.a.len() != batch.len() {
        return Err(PrefError::LengthMismatch {
            left: batch.len(),
            right: betas.y.len(),
        });
    }

    let mut terms = Vec::new();
    let mut components = Components::default();
    for component in Component::ALL {
        let (lambda, slot) = match component {
            Component::Text => (cfg.lambda_y, &mut components.y),
            Component::Visual => (cfg.lambda_v, &mut components.v),
            Component::Audio => (cfg.lambda_a, &mut components.a),
        };
        let mut family = Vec::new();
        for (i, rec) in batch.iter().enumerate() {
            if !component.is_active(rec.task_kind) {
                continue;
            }
            let beta = match component {
                Component::Text => Some(betas.y[i]),
                Component::Visual => betas.v[i],
                Component::Audio => betas.a[i],
            };
            let beta = check_beta(beta.ok_or_else(|| {
                rec.missing(match component {
                    Component::Visual => "visual",
                    _ => "audio",
                })
            })?)?;
            let gap = pair.gap(component, rec)?;
            family.push(ComparisonTerm {
                record: i,
                component,
                beta,
                gap,
                log_sigmoid: log_sigmoid(beta * gap),
                sensitivity: 0.0,
            });
        }
        if family.is_empty() {
            continue;
        }
        let inputs: Vec<f64> = family
            .iter()
            .map(|t| match cfg.tilt {
                Tilt::Pseudocode => t.log_sigmoid,
                Tilt::Theorem => -t.log_sigmoid,
            })
            .collect();
        let (value, grad) = robust_aggregate_with_grad(&inputs, lambda, cfg.tilt)?;
        *slot = value;
        for (t, g) in family.iter_mut().zip(grad) {
            // d total / d L_i, then chain through L = log σ(β·gap).
            let d_logsig = match cfg.tilt {
                Tilt::Pseudocode => g,
                Tilt::Theorem => -g,
            };
            t.sensitivity = d_logsig * t.beta * sigmoid(-t.beta * t.gap);
        }
        terms.extend(family);
    }

    Ok(ObjectiveValue {
        total: components.y + components.v + components.a,
        components,
        terms,
    })
}
