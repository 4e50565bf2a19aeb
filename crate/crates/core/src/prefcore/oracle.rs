//! Brute-force solver for `sup_Q { E_Q[ℓ] − λ·KL(Q‖P) }` over the simplex.
//!
//! Deliberately does not use the closed form: it runs pairwise mass-exchange
//! coordinate ascent, solving each one-dimensional concave subproblem by
//! bisection on its derivative.

use alloc::vec::Vec;

use libm::log;

use super::{finite, PrefError, Result};

pub const MAX_ORACLE_SUPPORT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct DroSolution {
    pub value: f64,
    pub q_star: Vec<f64>,
}

fn xlogx_over(q: f64, p: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        q * log(q / p)
    }
}

fn objective(losses: &[f64], base: &[f64], q: &[f64], lambda: f64) -> f64 {
    let expect: f64 = q.iter().zip(losses).map(|(q, l)| q * l).sum();
    let kl: f64 = q.iter().zip(base).map(|(q, p)| xlogx_over(*q, *p)).sum();
    expect - lambda * kl
}

/// Marginal value of moving mass onto coordinate `k`.
fn marginal(loss: f64, q: f64, p: f64, lambda: f64) -> f64 {
    if q <= 0.0 {
        f64::INFINITY
    } else {
        loss - lambda * (log(q / p) + 1.0)
    }
}

/// Moves mass `t ∈ (−q_i, q_j)` from `j` to `i` to maximize the objective.
fn exchange(losses: &[f64], base: &[f64], q: &[f64], i: usize, j: usize, lambda: f64) -> f64 {
    let deriv = |t: f64| {
        marginal(losses[i], q[i] + t, base[i], lambda) - marginal(losses[j], q[j] - t, base[j], lambda)
    };
    let (mut lo, mut hi) = (-q[i], q[j]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes `E_Q[ℓ] − λ·KL(Q‖P)` numerically. Support is capped at
/// [`MAX_ORACLE_SUPPORT`].
pub fn dro_oracle(losses: &[f64], base_weights: &[f64], lambda: f64) -> Result<DroSolution> {
    let n = losses.len();
    if n == 0 {
        return Err(PrefError::EmptyBatch);
    }
    if n > MAX_ORACLE_SUPPORT {
        return Err(PrefError::SupportTooLarge(n));
    }
    if base_weights.len() != n {
        return Err(PrefError::LengthMismatch {
            left: n,
            right: base_weights.len(),
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(PrefError::NonPositiveLambda(lambda));
    }
    for l in losses {
        finite("loss", *l)?;
    }
    if base_weights.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(PrefError::InvalidBase("weights must be strictly positive"));
    }
    let total: f64 = base_weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(PrefError::InvalidBase("weights must sum to 1"));
    }

    let mut q = base_weights.to_vec();
    for _sweep in 0..5000 {
        let mut moved = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let t = exchange(losses, base_weights, &q, i, j, lambda);
                q[i] += t;
                q[j] -= t;
                moved = moved.max(t.abs());
            }
        }
        if moved < 1e-16 {
            break;
        }
    }
    let z: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= z);
    Ok(DroSolution {
        value: objective(losses, base_weights, &q, lambda),
        q_star: q,
    })
}
