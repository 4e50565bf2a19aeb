use libm::{exp, log1p};

use super::{check_beta, finite, Component, ConditionalPolicy, PolicyPair, PreferenceRecord, Result};
use crate::numeric::log_sigmoid;

/// Policy/reference log-ratios of the winning and losing responses
/// (`log f_w`, `log f_l`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRatioPair {
    pub win_logratio: f64,
    pub lose_logratio: f64,
}

impl LogRatioPair {
    pub fn new(win_logratio: f64, lose_logratio: f64) -> Self {
        Self {
            win_logratio,
            lose_logratio,
        }
    }

    fn checked(&self) -> Result<(f64, f64)> {
        Ok((
            finite("win_logratio", self.win_logratio)?,
            finite("lose_logratio", self.lose_logratio)?,
        ))
    }
}

/// `log σ(β·(log f_w − log f_l))`. Always negative; `log 0.5` at a tie.
pub fn pair_preference_loss(lr: LogRatioPair, beta: f64) -> Result<f64> {
    let (w, l) = lr.checked()?;
    let beta = check_beta(beta)?;
    Ok(log_sigmoid(beta * (w - l)))
}

/// `log(1 + (f_l / f_w)^β)`, evaluated in log-space as a softplus of
/// `β·(log f_l − log f_w)`. Equals `−pair_preference_loss`; kept as a
/// separate route for cross-checking.
pub fn dpo_identity(lr: LogRatioPair, beta: f64) -> Result<f64> {
    let (w, l) = lr.checked()?;
    let beta = check_beta(beta)?;
    let log_ratio_pow = beta * l - beta * w;
    Ok(if log_ratio_pow > 0.0 {
        log_ratio_pow + log1p(exp(-log_ratio_pow))
    } else {
        log1p(exp(log_ratio_pow))
    })
}

fn anchor_loss<P: ConditionalPolicy + ?Sized>(
    pair: PolicyPair<'_, P>,
    rec: &PreferenceRecord,
    component: Component,
    beta: f64,
) -> Result<f64> {
    let beta = check_beta(beta)?;
    let gap = pair.gap(component, rec)?;
    Ok(log_sigmoid(beta * gap))
}

/// Winning response under `V_w` versus under `V_l`, audio held at `A_w`.
pub fn visual_anchor_loss<P: ConditionalPolicy + ?Sized>(
    pair: PolicyPair<'_, P>,
    rec: &PreferenceRecord,
    beta_v: f64,
) -> Result<f64> {
    if rec.visual_lose.is_none() {
        return Err(rec.missing("visual"));
    }
    anchor_loss(pair, rec, Component::Visual, beta_v)
}

/// Winning response under `A_w` versus under `A_l`, video held at `V_w`.
pub fn audio_anchor_loss<P: ConditionalPolicy + ?Sized>(
    pair: PolicyPair<'_, P>,
    rec: &PreferenceRecord,
    beta_a: f64,
) -> Result<f64> {
    if rec.audio_lose.is_none() {
        return Err(rec.missing("audio"));
    }
    anchor_loss(pair, rec, Component::Audio, beta_a)
}

#[cfg(test)]
mod tests {
    use alloc::string::ToString;
    use alloc::vec;

    use super::*;
    use crate::prefcore::{Conditioning, PrefError};
    use crate::TaskKind;

    const LN_HALF: f64 = -core::f64::consts::LN_2;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn pair_loss_examples() {
        approx(pair_preference_loss(LogRatioPair::new(0.0, 0.0), 0.5).unwrap(), LN_HALF, 1e-15);
        // mpmath: log(1 + e^-1) = 0.31326168751822283
        approx(pair_preference_loss(LogRatioPair::new(1.0, 0.0), 1.0).unwrap(), -0.313_261_687_518_222_8, 1e-14);
        approx(pair_preference_loss(LogRatioPair::new(0.0, 1.0), 1.0).unwrap(), -1.313_261_687_518_222_8, 1e-14);
    }

    #[test]
    fn dpo_identity_examples() {
        approx(dpo_identity(LogRatioPair::new(0.0, 0.0), 0.3).unwrap(), -LN_HALF, 1e-15);
        approx(dpo_identity(LogRatioPair::new(1.0, 0.0), 1.0).unwrap(), 0.313_261_687_518_222_8, 1e-14);
        // mpmath: log(1 + e^-2) = 0.12692801104297249
        approx(dpo_identity(LogRatioPair::new(2.0, -2.0), 0.5).unwrap(), 0.126_928_011_042_972_5, 1e-14);
    }

    #[test]
    fn non_finite_input_names_the_field() {
        let err = pair_preference_loss(LogRatioPair::new(f64::NAN, 0.0), 0.5).unwrap_err();
        assert!(matches!(err, PrefError::NonFinite { field: "win_logratio", .. }));
        let err = dpo_identity(LogRatioPair::new(0.0, f64::INFINITY), 0.5).unwrap_err();
        assert!(err.to_string().contains("lose_logratio"));
        assert!(matches!(
            pair_preference_loss(LogRatioPair::new(0.0, 0.0), 1.5),
            Err(PrefError::BetaOutOfRange(_))
        ));
    }

    /// Policy whose log-probability is a fixed function of the visual and
    /// audio vectors, so anchor gaps can be dialed in directly.
    struct Dial {
        scale: f64,
    }

    impl ConditionalPolicy for Dial {
        fn sequence_logprob(&self, _r: &[u32], c: &Conditioning<'_>) -> Result<f64> {
            Ok(self.scale * (c.visual[0] + c.audio[0]) - 3.0)
        }
    }

    fn record(kind: TaskKind) -> PreferenceRecord {
        PreferenceRecord {
            id: "r0".into(),
            question: vec![1],
            win_response: vec![1, 2],
            lose_response: vec![2, 1],
            visual_win: vec![1.0],
            visual_lose: kind.switch_eta().then(|| vec![0.0]),
            audio_win: vec![1.0],
            audio_lose: kind.switch_gamma().then(|| vec![0.0]),
            task_kind: kind,
            category: "Existential".into(),
        }
    }

    #[test]
    fn anchor_examples() {
        let reference = Dial { scale: 0.0 };
        let same = PolicyPair::new(&reference, &reference);
        let mvit = record(TaskKind::Mvit);
        let mait = record(TaskKind::Mait);
        approx(visual_anchor_loss(same, &mvit, 0.7).unwrap(), LN_HALF, 1e-15);
        approx(audio_anchor_loss(same, &mait, 0.7).unwrap(), LN_HALF, 1e-15);

        let gap_one = Dial { scale: 1.0 };
        let pair = PolicyPair::new(&gap_one, &reference);
        approx(visual_anchor_loss(pair, &mvit, 1.0).unwrap(), -0.313_261_687_518_222_8, 1e-14);
        // mpmath: log(1 + e^-0.8) = 0.37110066594777771
        approx(audio_anchor_loss(pair, &mait, 0.8).unwrap(), -0.371_100_665_947_777_7, 1e-14);

        let neg_half = Dial { scale: -0.5 };
        let pair = PolicyPair::new(&neg_half, &reference);
        // mpmath: log(1 + e^0.1) = 0.74439666007357089
        approx(visual_anchor_loss(pair, &mvit, 0.2).unwrap(), -0.744_396_660_073_570_9, 1e-14);
        approx(audio_anchor_loss(same, &mait, 0.1).unwrap(), LN_HALF, 1e-15);
    }

    #[test]
    fn anchor_requires_losing_modality() {
        let p = Dial { scale: 0.0 };
        let pair = PolicyPair::new(&p, &p);
        let rec = record(TaskKind::Mcit);
        let err = visual_anchor_loss(pair, &rec, 0.5).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("r0") && msg.contains("MCIT") && msg.contains("visual"), "{msg}");
        assert!(audio_anchor_loss(pair, &rec, 0.5).is_err());
    }
}
