//! Self-contained oracle battery. Each check compares an implementation
//! against an independent computation and reports its worst error.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::policy::synthetic::{separable_dataset, SyntheticSpec};
use crate::policy::{cavpref_gradient, check_gradient, ModelDims, PolicyModel, TrainState};
use crate::prefcore::{
    cavpref_objective, dpo_identity, dro_oracle, pair_preference_loss, robust_aggregate, BetaCalibrator, LogRatioPair,
    PolicyPair, PrefError, PreferenceRecord, RobustConfig, Tilt,
};
use crate::rng::{self, ChaCha8Rng};
use crate::TaskKind;

/// A deliberate defect, used to show that the battery catches it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Evaluate the tilt fixtures with the opposite convention.
    TiltMismatch,
    /// Double one analytic gradient coordinate.
    GradientCorruption,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub robust: RobustConfig,
    pub fault: Option<Fault>,
    /// Toy configurations for the gradient check.
    pub gradient_configs: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            robust: RobustConfig::default(),
            fault: None,
            gradient_configs: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    pub worst_error: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(name: &str, cases: usize, worst_error: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst_error <= tolerance,
            cases,
            worst_error,
            tolerance,
            detail: None,
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: false,
            cases: 0,
            worst_error: f64::INFINITY,
            tolerance: 0.0,
            detail: Some(detail),
        }
    }

    fn with_detail(mut self, d: String) -> Self {
        self.detail = Some(d);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyLedger {
    pub checks: Vec<CheckResult>,
}

impl VerifyLedger {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn worst(acc: &mut f64, e: f64) {
    if !(e <= *acc) {
        *acc = e;
    }
}

/// `pair_preference_loss + dpo_identity = 0` over random log-ratios in
/// [−5, 5] and β in [0.1, 1], as a relative error.
pub fn dpo_identity_sweep(seed: u64, cases: usize) -> CheckResult {
    let mut r = rng::seeded(rng::derive_seed(seed, "dpo-identity"));
    let mut err = 0.0;
    for _ in 0..cases {
        let lr = LogRatioPair::new(r.random_range(-5.0..=5.0), r.random_range(-5.0..=5.0));
        let beta = r.random_range(0.1..=1.0);
        match (pair_preference_loss(lr, beta), dpo_identity(lr, beta)) {
            (Ok(l), Ok(d)) => worst(&mut err, libm::fabs(l + d) / libm::fabs(d).max(f64::MIN_POSITIVE)),
            (a, b) => return CheckResult::failed("dpo_identity", format!("evaluation error: {a:?} / {b:?}")),
        }
    }
    CheckResult::new("dpo_identity", cases, err, 1e-10)
}

fn random_simplex(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// The brute-force maximizer agrees with `λ·log E_P[e^{ℓ/λ}]` and with the
/// tilted distribution `P·e^{ℓ/λ}/Z`. Reports the value error; the check also
/// fails if total variation exceeds 1e-4.
pub fn dro_equivalence(seed: u64, cases: usize) -> CheckResult {
    let mut r = rng::seeded(rng::derive_seed(seed, "dro-equivalence"));
    let (mut value_err, mut tv_err) = (0.0, 0.0);
    for _ in 0..cases {
        let n = r.random_range(1..=5);
        let losses: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        let p = random_simplex(&mut r, n);
        let lambda = r.random_range(0.2..5.0);
        let sol = match dro_oracle(&losses, &p, lambda) {
            Ok(s) => s,
            Err(e) => return CheckResult::failed("dro_equivalence", format!("{e}")),
        };
        let shifted: Vec<f64> = losses.iter().zip(&p).map(|(l, w)| l / lambda + libm::log(*w)).collect();
        let m = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = shifted.iter().map(|s| libm::exp(s - m)).sum();
        let closed = lambda * (m + libm::log(z));
        worst(&mut value_err, libm::fabs(sol.value - closed));
        let tv: f64 = sol
            .q_star
            .iter()
            .zip(&shifted)
            .map(|(q, s)| libm::fabs(q - libm::exp(s - m) / z))
            .sum::<f64>()
            / 2.0;
        worst(&mut tv_err, tv);
    }
    let mut c = CheckResult::new("dro_equivalence", cases, value_err, 1e-6);
    c.passed &= tv_err <= 1e-4;
    c.with_detail(format!("max total variation {tv_err:.3e} (tolerance 1e-4)"))
}

/// A constant batch aggregates to the constant under both tilts, any λ.
pub fn constant_batch(seed: u64, cases: usize) -> CheckResult {
    let mut r = rng::seeded(rng::derive_seed(seed, "constant-batch"));
    let mut err = 0.0;
    for _ in 0..cases {
        let c = r.random_range(0.0..10.0);
        let n = r.random_range(1..=32);
        let lambda = libm::pow(10.0, r.random_range(-3.0..3.0));
        let theorem = robust_aggregate(&alloc::vec![c; n], lambda, Tilt::Theorem);
        let pseudo = robust_aggregate(&alloc::vec![-c; n], lambda, Tilt::Pseudocode);
        match (theorem, pseudo) {
            (Ok(t), Ok(p)) => {
                worst(&mut err, libm::fabs(t - c));
                worst(&mut err, libm::fabs(p - c));
            }
            (a, b) => return CheckResult::failed("constant_batch", format!("{a:?} / {b:?}")),
        }
    }
    CheckResult::new("constant_batch", cases, err, 1e-9)
}

/// At λ = 1e6 the theorem tilt is the plain mean of losses in [0, 10].
pub fn lambda_limit(seed: u64, cases: usize) -> CheckResult {
    let mut r = rng::seeded(rng::derive_seed(seed, "lambda-limit"));
    let mut err = 0.0;
    for _ in 0..cases {
        let n = r.random_range(1..=64);
        let v: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=10.0)).collect();
        let mean = v.iter().sum::<f64>() / n as f64;
        match robust_aggregate(&v, 1e6, Tilt::Theorem) {
            Ok(a) => worst(&mut err, libm::fabs(a - mean)),
            Err(e) => return CheckResult::failed("lambda_limit", format!("{e}")),
        }
    }
    CheckResult::new("lambda_limit", cases, err, 1e-4)
}

/// Outputs in [0.1, 1], weakly increasing in the raw gap, and exactly 0.55
/// on degenerate batches.
pub fn beta_bounds(seed: u64, cases: usize) -> CheckResult {
    let mut r = rng::seeded(rng::derive_seed(seed, "beta-bounds"));
    let cal = BetaCalibrator::constant();
    let mut violations = 0usize;
    for k in 0..cases {
        let n = r.random_range(1..=40);
        let win: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
        let lose: Vec<f64> = if k % 10 == 0 {
            win.iter().map(|w| w - 0.3).collect()
        } else {
            (0..n).map(|_| r.random_range(-2.0..2.0)).collect()
        };
        let betas = match cal.calibrate(&win, &lose) {
            Ok(b) => b,
            Err(e) => return CheckResult::failed("beta_bounds", format!("{e}")),
        };
        let gaps: Vec<f64> = win.iter().zip(&lose).map(|(w, l)| w - l).collect();
        let degenerate = gaps.iter().all(|g| *g == gaps[0]);
        for i in 0..n {
            if !(0.1..=1.0).contains(&betas[i]) || (degenerate && betas[i] != 0.55) {
                violations += 1;
            }
            for j in 0..n {
                if gaps[i] < gaps[j] && betas[i] > betas[j] {
                    violations += 1;
                }
            }
        }
    }
    CheckResult::new("beta_bounds", cases, violations as f64, 0.0)
}

/// Known values for each tilt convention, plus the Jensen ordering
/// theorem > mean > pseudocode on non-constant losses.
pub fn tilt_convention(seed: u64, fault: Option<Fault>) -> CheckResult {
    let flip = |t: Tilt| match (fault, t) {
        (Some(Fault::TiltMismatch), Tilt::Theorem) => Tilt::Pseudocode,
        (Some(Fault::TiltMismatch), Tilt::Pseudocode) => Tilt::Theorem,
        _ => t,
    };
    let fixtures: [(Tilt, [f64; 2], f64); 2] = [
        (Tilt::Theorem, [0.2, 1.4], 0.970_135_286_778_085_9),
        (Tilt::Pseudocode, [-0.2, -1.4], 0.629_864_713_221_914_1),
    ];
    let mut err = 0.0;
    for (tilt, v, expected) in fixtures {
        match robust_aggregate(&v, 1.0, flip(tilt)) {
            Ok(a) => worst(&mut err, libm::fabs(a - expected)),
            Err(_) => err = f64::INFINITY,
        }
    }
    let mut r = rng::seeded(rng::derive_seed(seed, "tilt-order"));
    let mut order_violations = 0;
    for _ in 0..100 {
        let n = r.random_range(2..=16);
        let l: Vec<f64> = (0..n).map(|_| r.random_range(0.0..5.0)).collect();
        if l.iter().all(|x| *x == l[0]) {
            continue;
        }
        let neg: Vec<f64> = l.iter().map(|x| -x).collect();
        let mean = l.iter().sum::<f64>() / n as f64;
        let lambda = r.random_range(0.1..10.0);
        let t = robust_aggregate(&l, lambda, flip(Tilt::Theorem)).unwrap_or(f64::NAN);
        let p = robust_aggregate(&neg, lambda, flip(Tilt::Pseudocode)).unwrap_or(f64::NAN);
        if !(t > mean && mean > p) {
            order_violations += 1;
        }
    }
    let mut c = CheckResult::new("tilt_convention", 102, err, 1e-12);
    c.passed &= order_violations == 0;
    c.with_detail(format!("{order_violations} ordering violations"))
}

/// A seeded toy configuration: vocab ≤ 8, feature_dim ≤ 6, responses ≤ 5
/// tokens, a batch covering all nine task kinds, and a policy moved away
/// from its reference.
pub fn toy_configuration(seed: u64, index: usize) -> (TrainState, Vec<PreferenceRecord>, BetaCalibrator) {
    let mut r = rng::seeded(rng::derive_seed(seed, &format!("toy-{index}")));
    let dims = ModelDims {
        vocab_size: r.random_range(4..=8),
        feature_dim: r.random_range(2..=6),
        context_window: r.random_range(1..=3),
    };
    let mut spec = SyntheticSpec::new(dims);
    spec.response_len = r.random_range(1..=5);
    spec.world_seed = r.random();
    let batch = separable_dataset(&spec, 9 + r.random_range(0..10), r.random());
    let policy = PolicyModel::new("toy", dims, r.random(), 0.3).expect("toy dims are valid");
    let mut state = TrainState::new(policy, r.random());
    for w in state.policy.weights_mut() {
        *w += r.random_range(-0.2..0.2);
    }
    let cal = BetaCalibrator::cosine(dims.vocab_size, dims.feature_dim, r.random());
    (state, batch, cal)
}

/// Analytic gradients against central differences (h = 1e-5) on every
/// coordinate of each toy configuration, alternating tilts.
pub fn gradient_check(seed: u64, configs: usize, base: &RobustConfig, fault: Option<Fault>) -> CheckResult {
    let mut err = 0.0;
    let mut worst_at = String::new();
    for k in 0..configs {
        let (state, batch, cal) = toy_configuration(seed, k);
        let cfg = RobustConfig {
            tilt: if k % 2 == 0 { Tilt::Theorem } else { Tilt::Pseudocode },
            ..*base
        };
        let mut grad = match cavpref_gradient(&state, &batch, &cal, &cfg) {
            Ok(g) => g.grad,
            Err(e) => return CheckResult::failed("gradient_check", format!("config {k}: {e}")),
        };
        if fault == Some(Fault::GradientCorruption) {
            let i = (0..grad.len())
                .max_by(|a, b| libm::fabs(grad[*a]).total_cmp(&libm::fabs(grad[*b])))
                .unwrap_or(0);
            grad[i] *= 2.0;
        }
        let coords: Vec<usize> = (0..grad.len()).collect();
        let mut probe = state.policy.clone();
        let report = check_gradient(
            |w| {
                probe.weights_mut().copy_from_slice(w);
                cavpref_objective(PolicyPair::new(&probe, &state.reference), &batch, &cal, &cfg)
                    .map(|v| v.total)
                    .unwrap_or(f64::NAN)
            },
            state.policy.weights(),
            &grad,
            &coords,
            1e-5,
            1e-4,
        );
        if !(report.max_rel_error <= err) {
            err = report.max_rel_error;
            worst_at = match report.worst_coordinate {
                Some(c) => format!("config {k}, coordinate {c}"),
                None => format!("config {k}"),
            };
        }
    }
    CheckResult::new("gradient_check", configs, err, 1e-4).with_detail(format!("worst at {worst_at}"))
}

/// With π_θ = π_ref every single-kind batch scores ln 2 per active family.
pub fn identity_baseline(seed: u64, base: &RobustConfig) -> CheckResult {
    let dims = ModelDims {
        vocab_size: 6,
        feature_dim: 4,
        context_window: 2,
    };
    let mut err = 0.0;
    for kind in TaskKind::ALL {
        let mut spec = SyntheticSpec::new(dims);
        spec.kinds = alloc::vec![kind];
        let batch = separable_dataset(&spec, 12, seed);
        let policy = PolicyModel::new("id", dims, seed, 0.5).expect("valid dims");
        let cal = BetaCalibrator::cosine(dims.vocab_size, dims.feature_dim, seed);
        let expected = core::f64::consts::LN_2 * (1.0 + kind.switch_eta() as u8 as f64 + kind.switch_gamma() as u8 as f64);
        for tilt in [Tilt::Theorem, Tilt::Pseudocode] {
            let cfg = RobustConfig { tilt, ..*base };
            match cavpref_objective(PolicyPair::new(&policy, &policy), &batch, &cal, &cfg) {
                Ok(v) => worst(&mut err, libm::fabs(v.total - expected)),
                Err(e) => return CheckResult::failed("identity_baseline", format!("{kind}: {e}")),
            }
        }
    }
    CheckResult::new("identity_baseline", 18, err, 1e-7)
}

/// Validates the configuration, then runs every check.
pub fn run_battery(cfg: &VerifyConfig) -> Result<VerifyLedger, PrefError> {
    cfg.robust.validate()?;
    let s = cfg.seed;
    let checks = alloc::vec![
        dpo_identity_sweep(s, 1000),
        dro_equivalence(s, 200),
        constant_batch(s, 200),
        lambda_limit(s, 200),
        gradient_check(s, cfg.gradient_configs, &cfg.robust, cfg.fault),
        beta_bounds(s, 100),
        tilt_convention(s, cfg.fault),
        identity_baseline(s, &cfg.robust),
    ];
    Ok(VerifyLedger { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_passes() {
        let cfg = VerifyConfig {
            gradient_configs: 4,
            ..VerifyConfig::default()
        };
        let ledger = run_battery(&cfg).unwrap();
        assert!(ledger.all_passed(), "{:#?}", ledger.failing().collect::<Vec<_>>());
    }

    #[test]
    fn planted_faults_are_named() {
        let tilt = tilt_convention(0, Some(Fault::TiltMismatch));
        assert!(!tilt.passed);
        let grad = gradient_check(0, 2, &RobustConfig::default(), Some(Fault::GradientCorruption));
        assert!(!grad.passed);
    }

    #[test]
    fn invalid_config_stops_before_checks() {
        let cfg = VerifyConfig {
            robust: RobustConfig {
                lambda_a: 0.0,
                ..RobustConfig::default()
            },
            ..VerifyConfig::default()
        };
        assert!(run_battery(&cfg).is_err());
    }
}
