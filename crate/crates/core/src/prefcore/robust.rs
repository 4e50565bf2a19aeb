use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{finite, PrefError, Result};
use crate::numeric::{log_mean_exp, softmax};

/// Direction of the exponential reweighting in the robust aggregate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tilt {
    /// `−λ·log mean exp(L/λ)` over the log-sigmoid values `L ≤ 0`.
    Pseudocode,
    /// `λ·log mean exp(ℓ/λ)` over the non-negative losses `ℓ = −L`.
    /// Upweights the hardest samples.
    #[default]
    Theorem,
}

impl core::str::FromStr for Tilt {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pseudocode" => Ok(Tilt::Pseudocode),
            "theorem" => Ok(Tilt::Theorem),
            other => Err(alloc::format!("unknown tilt `{other}` (expected pseudocode|theorem)")),
        }
    }
}

/// Robustness temperatures for the three loss families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustConfig {
    pub lambda_y: f64,
    pub lambda_v: f64,
    pub lambda_a: f64,
    pub tilt: Tilt,
    /// Radius of the KL ball. Only recorded; the penalty is parameterized by λ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_note: Option<f64>,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            lambda_y: 1.0,
            lambda_v: 1.0,
            lambda_a: 0.8,
            tilt: Tilt::Theorem,
            rho_note: None,
        }
    }
}

impl RobustConfig {
    /// Mean-risk limit: every λ pushed to 1e6.
    pub fn mean_risk(tilt: Tilt) -> Self {
        Self {
            lambda_y: 1e6,
            lambda_v: 1e6,
            lambda_a: 1e6,
            tilt,
            rho_note: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for l in [self.lambda_y, self.lambda_v, self.lambda_a] {
            check_lambda(l)?;
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(PrefError::NonPositiveLambda(lambda));
    }
    Ok(lambda)
}

/// KL-robust aggregate of a batch of per-sample values.
///
/// With `Tilt::Pseudocode` the inputs are log-sigmoid values and the result is
/// `−λ·log mean exp(L/λ)`; with `Tilt::Theorem` the inputs are non-negative
/// losses and the result is `λ·log mean exp(ℓ/λ)`.
pub fn robust_aggregate(losses: &[f64], lambda: f64, tilt: Tilt) -> Result<f64> {
    robust_aggregate_with_grad(losses, lambda, tilt).map(|(v, _)| v)
}

/// The aggregate and its derivative with respect to each input.
pub fn robust_aggregate_with_grad(losses: &[f64], lambda: f64, tilt: Tilt) -> Result<(f64, Vec<f64>)> {
    let lambda = check_lambda(lambda)?;
    if losses.is_empty() {
        return Err(PrefError::EmptyBatch);
    }
    let mut scaled = Vec::with_capacity(losses.len());
    for l in losses {
        scaled.push(finite("loss", *l)? / lambda);
    }
    let lme = log_mean_exp(&scaled).ok_or(PrefError::EmptyBatch)?;
    let weights = softmax(&scaled);
    Ok(match tilt {
        Tilt::Theorem => (lambda * lme, weights),
        Tilt::Pseudocode => (-lambda * lme, weights.into_iter().map(|w| -w).collect()),
    })
}
