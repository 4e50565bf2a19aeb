use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use super::{cavpref_gradient, PolicyError, Result, TrainState};
use crate::prefcore::{cavpref_objective, BetaCalibrator, PolicyPair, PreferenceRecord, RobustConfig};
use crate::rng;

/// Above this many parameters a seeded random subset is checked.
pub const FD_SUBSET_LIMIT: usize = 200;

/// Denominator floor for the relative error, so that coordinates whose true
/// derivative is ~0 are judged on absolute error instead.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub passed: bool,
    pub max_rel_error: f64,
    pub worst_coordinate: Option<usize>,
    pub checked: usize,
    pub warning: Option<String>,
}

/// Compares `analytic[k]` with central differences of `f` for each `k` in `coords`.
pub fn check_gradient<F>(mut f: F, params: &[f64], analytic: &[f64], coords: &[usize], h: f64, tolerance: f64) -> FdReport
where
    F: FnMut(&[f64]) -> f64,
{
    if coords.is_empty() {
        return FdReport {
            passed: true,
            max_rel_error: 0.0,
            worst_coordinate: None,
            checked: 0,
            warning: Some("no coordinates to check; vacuous pass".into()),
        };
    }
    let mut work = params.to_vec();
    let mut worst = (0.0f64, None);
    for &k in coords {
        let orig = work[k];
        work[k] = orig + h;
        let up = f(&work);
        work[k] = orig - h;
        let dn = f(&work);
        work[k] = orig;
        let numeric = (up - dn) / (2.0 * h);
        let a = analytic[k];
        let rel = libm::fabs(a - numeric) / libm::fabs(a).max(libm::fabs(numeric)).max(REL_FLOOR);
        if !(rel <= worst.0) || worst.1.is_none() {
            worst = (rel, Some(k));
        }
    }
    FdReport {
        passed: worst.0 <= tolerance,
        max_rel_error: worst.0,
        worst_coordinate: worst.1,
        checked: coords.len(),
        warning: None,
    }
}

/// Central-difference check of [`cavpref_gradient`] on the policy weights.
/// Checks every coordinate up to `limit`, a seeded subset beyond it.
pub fn finite_diff_check(
    state: &TrainState,
    batch: &[PreferenceRecord],
    cal: &BetaCalibrator,
    cfg: &RobustConfig,
    h: f64,
    tolerance: f64,
    limit: usize,
) -> Result<FdReport> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(PolicyError::InvalidHyper(alloc::format!("step {h} outside [1e-7, 1e-3]")));
    }
    let analytic = cavpref_gradient(state, batch, cal, cfg)?.grad;
    let n = analytic.len();
    let coords: Vec<usize> = if n > limit {
        let mut r = rng::seeded(rng::derive_seed(state.rng_seed, "fd-subset"));
        let mut c = index::sample(&mut r, n, limit).into_vec();
        c.sort_unstable();
        c
    } else {
        (0..n).collect()
    };
    let mut probe = state.policy.clone();
    let mut failure = None;
    let report = check_gradient(
        |w| {
            probe.weights_mut().copy_from_slice(w);
            match cavpref_objective(PolicyPair::new(&probe, &state.reference), batch, cal, cfg) {
                Ok(v) => v.total,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        },
        state.policy.weights(),
        &analytic,
        &coords,
        h,
        tolerance,
    );
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(report)
}
