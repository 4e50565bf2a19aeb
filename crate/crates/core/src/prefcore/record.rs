use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{PrefError, Result};
use crate::TaskKind;

/// One preference sample: question, winning/losing responses and the
/// conditioning vectors for both sides of the anchor comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub id: String,
    pub question: Vec<u32>,
    pub win_response: Vec<u32>,
    pub lose_response: Vec<u32>,
    pub visual_win: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visual_lose: Option<Vec<f64>>,
    pub audio_win: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_lose: Option<Vec<f64>>,
    pub task_kind: TaskKind,
    pub category: String,
}

impl PreferenceRecord {
    pub fn validate(&self, feature_dim: usize) -> Result<()> {
        if self.win_response == self.lose_response {
            return Err(PrefError::IdenticalResponses {
                record: self.id.clone(),
            });
        }
        let kind = self.task_kind;
        match (kind.switch_eta(), self.visual_lose.is_some()) {
            (true, false) => return Err(self.missing("visual")),
            (false, true) => {
                return Err(PrefError::UnexpectedModality {
                    record: self.id.clone(),
                    kind,
                    modality: "visual",
                })
            }
            _ => {}
        }
        match (kind.switch_gamma(), self.audio_lose.is_some()) {
            (true, false) => return Err(self.missing("audio")),
            (false, true) => {
                return Err(PrefError::UnexpectedModality {
                    record: self.id.clone(),
                    kind,
                    modality: "audio",
                })
            }
            _ => {}
        }
        let fields: [(&'static str, Option<&Vec<f64>>); 4] = [
            ("visual_win", Some(&self.visual_win)),
            ("visual_lose", self.visual_lose.as_ref()),
            ("audio_win", Some(&self.audio_win)),
            ("audio_lose", self.audio_lose.as_ref()),
        ];
        for (field, v) in fields {
            let Some(v) = v else { continue };
            if v.len() != feature_dim {
                return Err(PrefError::DimensionMismatch {
                    record: self.id.clone(),
                    field,
                    got: v.len(),
                    expected: feature_dim,
                });
            }
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(PrefError::NonFinite { field, value: *x });
            }
        }
        Ok(())
    }

    pub(crate) fn missing(&self, modality: &'static str) -> PrefError {
        PrefError::MissingModality {
            record: self.id.clone(),
            kind: self.task_kind,
            modality,
        }
    }

    pub fn conditioning(&self) -> Conditioning<'_> {
        Conditioning {
            visual: &self.visual_win,
            audio: &self.audio_win,
            question: &self.question,
        }
    }
}

/// What a policy conditions on: `(V, A, q)`.
#[derive(Debug, Clone, Copy)]
pub struct Conditioning<'a> {
    pub visual: &'a [f64],
    pub audio: &'a [f64],
    pub question: &'a [u32],
}

/// A response together with the conditioning it is scored under.
#[derive(Debug, Clone, Copy)]
pub struct Side<'a> {
    pub response: &'a [u32],
    pub cond: Conditioning<'a>,
}

/// A policy that assigns an exact log-probability to a response.
pub trait ConditionalPolicy {
    fn sequence_logprob(&self, response: &[u32], cond: &Conditioning<'_>) -> Result<f64>;
}

/// Trainable policy and its frozen reference.
pub struct PolicyPair<'a, P: ?Sized> {
    pub policy: &'a P,
    pub reference: &'a P,
}

impl<P: ?Sized> Clone for PolicyPair<'_, P> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<P: ?Sized> Copy for PolicyPair<'_, P> {}

impl<'a, P: ConditionalPolicy + ?Sized> PolicyPair<'a, P> {
    pub fn new(policy: &'a P, reference: &'a P) -> Self {
        Self { policy, reference }
    }

    /// `log π_θ(y|c) − log π_ref(y|c)`.
    pub fn logratio(&self, side: &Side<'_>) -> Result<f64> {
        let p = self.policy.sequence_logprob(side.response, &side.cond)?;
        let r = self.reference.sequence_logprob(side.response, &side.cond)?;
        super::finite("logratio", p - r)
    }

    /// Log-ratio of the preferred side minus that of the dispreferred side.
    pub fn gap(&self, component: Component, rec: &PreferenceRecord) -> Result<f64> {
        let (pos, neg) = component.sides(rec)?;
        Ok(self.logratio(&pos)? - self.logratio(&neg)?)
    }
}

/// The three comparison families of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// `y_w` vs `y_l` under the presented input.
    Text,
    /// `y_w` under `V_w` vs `y_w` under `V_l`.
    Visual,
    /// `y_w` under `A_w` vs `y_w` under `A_l`.
    Audio,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Text, Component::Visual, Component::Audio];

    pub fn is_active(self, kind: TaskKind) -> bool {
        match self {
            Component::Text => true,
            Component::Visual => kind.switch_eta(),
            Component::Audio => kind.switch_gamma(),
        }
    }

    /// The (preferred, dispreferred) sides compared by this component.
    pub fn sides<'a>(self, rec: &'a PreferenceRecord) -> Result<(Side<'a>, Side<'a>)> {
        let base = rec.conditioning();
        let win = Side {
            response: &rec.win_response,
            cond: base,
        };
        let other = match self {
            Component::Text => Side {
                response: &rec.lose_response,
                cond: base,
            },
            Component::Visual => {
                let v = rec.visual_lose.as_deref().ok_or_else(|| rec.missing("visual"))?;
                Side {
                    response: &rec.win_response,
                    cond: Conditioning { visual: v, ..base },
                }
            }
            Component::Audio => {
                let a = rec.audio_lose.as_deref().ok_or_else(|| rec.missing("audio"))?;
                Side {
                    response: &rec.win_response,
                    cond: Conditioning { audio: a, ..base },
                }
            }
        };
        Ok((win, other))
    }
}
