use alloc::vec::Vec;

use super::{PolicyModel, Result, TrainState};
use crate::prefcore::{
    cavpref_objective, evaluate_with_betas, BatchBetas, BetaCalibrator, ObjectiveValue, PolicyPair,
    PreferenceRecord, RobustConfig,
};

/// Objective value and its gradient with respect to the policy weights.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub objective: ObjectiveValue,
    pub grad: Vec<f64>,
}

fn backprop(policy: &PolicyModel, batch: &[PreferenceRecord], objective: ObjectiveValue) -> Result<Gradient> {
    let mut grad = alloc::vec![0.0; policy.weights().len()];
    for term in &objective.terms {
        if term.sensitivity == 0.0 {
            continue;
        }
        let (pos, neg) = term.component.sides(&batch[term.record])?;
        policy.accumulate_logprob_grad(pos.response, &pos.cond, term.sensitivity, &mut grad)?;
        policy.accumulate_logprob_grad(neg.response, &neg.cond, -term.sensitivity, &mut grad)?;
    }
    Ok(Gradient { objective, grad })
}

/// Analytic gradient of the calibrated objective. Reference log-probabilities
/// and the calibrated β are constants.
pub fn cavpref_gradient(
    state: &TrainState,
    batch: &[PreferenceRecord],
    cal: &BetaCalibrator,
    cfg: &RobustConfig,
) -> Result<Gradient> {
    let pair = PolicyPair::new(&state.policy, &state.reference);
    let objective = cavpref_objective(pair, batch, cal, cfg)?;
    backprop(&state.policy, batch, objective)
}

/// As [`cavpref_gradient`] with caller-supplied β.
pub fn gradient_with_betas(
    policy: &PolicyModel,
    reference: &PolicyModel,
    batch: &[PreferenceRecord],
    betas: &BatchBetas,
    cfg: &RobustConfig,
) -> Result<Gradient> {
    let objective = evaluate_with_betas(PolicyPair::new(policy, reference), batch, betas, cfg)?;
    backprop(policy, batch, objective)
}
