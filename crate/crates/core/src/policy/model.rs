use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PolicyError, Result};
use crate::numeric::log_softmax_in_place;
use crate::prefcore::{ConditionalPolicy, Conditioning, PrefError};
use crate::rng;

pub const MAX_VOCAB: usize = 64;
pub const MAX_FEATURES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub feature_dim: usize,
    /// How many previous tokens feed the next-token logits.
    pub context_window: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 || self.vocab_size > MAX_VOCAB {
            return Err(PolicyError::InvalidDims(alloc::format!(
                "vocab_size {} not in 2..={MAX_VOCAB}",
                self.vocab_size
            )));
        }
        if self.feature_dim == 0 || self.feature_dim > MAX_FEATURES {
            return Err(PolicyError::InvalidDims(alloc::format!(
                "feature_dim {} not in 1..={MAX_FEATURES}",
                self.feature_dim
            )));
        }
        if self.context_window == 0 || self.context_window > 8 {
            return Err(PolicyError::InvalidDims(alloc::format!(
                "context_window {} not in 1..=8",
                self.context_window
            )));
        }
        Ok(())
    }

    /// `[visual, audio, question mean, bias]` width.
    pub fn dense_width(&self) -> usize {
        3 * self.feature_dim + 1
    }

    /// One-hot slots per context position: the vocabulary plus a start marker.
    pub fn slot_width(&self) -> usize {
        self.vocab_size + 1
    }

    pub fn input_dim(&self) -> usize {
        self.dense_width() + self.context_window * self.slot_width()
    }

    pub fn param_count(&self) -> usize {
        self.vocab_size * self.input_dim()
    }
}

/// Single linear-softmax layer over
/// `[visual ⊕ audio ⊕ mean question embedding ⊕ 1 ⊕ previous-token one-hots]`.
///
/// Weights are row-major `vocab_size × input_dim`. Question token embeddings
/// are fixed and regenerated from `embed_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct PolicyModel {
    pub id: String,
    dims: ModelDims,
    embed_seed: u64,
    weights: Vec<f64>,
    question_table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    id: String,
    dims: ModelDims,
    embed_seed: u64,
    weights: Vec<f64>,
}

impl TryFrom<ModelRepr> for PolicyModel {
    type Error = PolicyError;

    fn try_from(r: ModelRepr) -> Result<Self> {
        PolicyModel::from_weights(r.id, r.dims, r.embed_seed, r.weights)
    }
}

impl From<PolicyModel> for ModelRepr {
    fn from(m: PolicyModel) -> Self {
        ModelRepr {
            id: m.id,
            dims: m.dims,
            embed_seed: m.embed_seed,
            weights: m.weights,
        }
    }
}

fn question_table(dims: &ModelDims, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(rng::derive_seed(seed, "question-embeddings"));
    (0..dims.vocab_size * dims.feature_dim)
        .map(|_| r.random_range(-1.0..1.0))
        .collect()
}

impl PolicyModel {
    /// Weights drawn uniformly from `[-init_scale, init_scale]`; zero gives
    /// the uniform policy.
    pub fn new(id: impl Into<String>, dims: ModelDims, seed: u64, init_scale: f64) -> Result<Self> {
        dims.validate()?;
        let mut r = rng::seeded(rng::derive_seed(seed, "policy-init"));
        let weights = (0..dims.param_count())
            .map(|_| {
                if init_scale > 0.0 {
                    r.random_range(-init_scale..init_scale)
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_weights(id.into(), dims, seed, weights)
    }

    pub fn from_weights(id: String, dims: ModelDims, embed_seed: u64, weights: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        if weights.len() != dims.param_count() {
            return Err(PolicyError::Dimension {
                field: "weights",
                got: weights.len(),
                expected: dims.param_count(),
            });
        }
        Ok(Self {
            id,
            question_table: question_table(&dims, embed_seed),
            dims,
            embed_seed,
            weights,
        })
    }

    pub fn dims(&self) -> ModelDims {
        self.dims
    }

    pub fn embed_seed(&self) -> u64 {
        self.embed_seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    fn check_tokens(&self, field: &'static str, toks: &[u32]) -> Result<()> {
        match toks.iter().position(|&t| t as usize >= self.dims.vocab_size) {
            Some(position) => Err(PolicyError::OutOfVocab {
                field,
                token: toks[position],
                position,
                vocab: self.dims.vocab_size,
            }),
            None => Ok(()),
        }
    }

    fn dense_input(&self, cond: &Conditioning<'_>) -> Result<Vec<f64>> {
        let f = self.dims.feature_dim;
        for (field, v) in [("visual", cond.visual), ("audio", cond.audio)] {
            if v.len() != f {
                return Err(PolicyError::Dimension {
                    field,
                    got: v.len(),
                    expected: f,
                });
            }
        }
        self.check_tokens("question", cond.question)?;
        let mut x = Vec::with_capacity(self.dims.dense_width());
        x.extend_from_slice(cond.visual);
        x.extend_from_slice(cond.audio);
        let mut q = alloc::vec![0.0; f];
        if !cond.question.is_empty() {
            for &t in cond.question {
                let row = &self.question_table[t as usize * f..(t as usize + 1) * f];
                q.iter_mut().zip(row).for_each(|(a, b)| *a += b);
            }
            let n = cond.question.len() as f64;
            q.iter_mut().for_each(|a| *a /= n);
        }
        x.extend_from_slice(&q);
        x.push(1.0);
        Ok(x)
    }

    /// Column index of the one-hot for context slot `j` (1 = previous token)
    /// at decoding step `t`.
    fn context_column(&self, response: &[u32], t: usize, j: usize) -> usize {
        let token = if t >= j {
            response[t - j] as usize
        } else {
            self.dims.vocab_size
        };
        self.dims.dense_width() + (j - 1) * self.dims.slot_width() + token
    }

    /// Walks the response, yielding per-step log-probabilities over the
    /// vocabulary and the context columns used.
    fn walk(
        &self,
        response: &[u32],
        cond: &Conditioning<'_>,
        mut visit: impl FnMut(usize, &[f64], &[usize]),
    ) -> Result<Vec<f64>> {
        self.check_tokens("response", response)?;
        let x = self.dense_input(cond)?;
        let v = self.dims.vocab_size;
        let d = self.dims.input_dim();
        let dw = self.dims.dense_width();
        let base: Vec<f64> = (0..v)
            .map(|o| crate::numeric::dot(&self.weights[o * d..o * d + dw], &x))
            .collect();
        let mut cols = alloc::vec![0usize; self.dims.context_window];
        let mut logits = alloc::vec![0.0; v];
        for t in 0..response.len() {
            for (j, c) in cols.iter_mut().enumerate() {
                *c = self.context_column(response, t, j + 1);
            }
            for o in 0..v {
                logits[o] = base[o] + cols.iter().map(|c| self.weights[o * d + c]).sum::<f64>();
            }
            log_softmax_in_place(&mut logits);
            visit(t, &logits, &cols);
        }
        Ok(x)
    }

    /// Log-probabilities over the vocabulary at each step of `response`.
    pub fn step_logprobs(&self, response: &[u32], cond: &Conditioning<'_>) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(response.len());
        self.walk(response, cond, |_, lp, _| out.push(lp.to_vec()))?;
        Ok(out)
    }

    /// `Σ_t log π(y_t | y_<t, V, A, q)`.
    pub fn logprob(&self, response: &[u32], cond: &Conditioning<'_>) -> Result<f64> {
        let mut total = 0.0;
        self.walk(response, cond, |t, lp, _| total += lp[response[t] as usize])?;
        Ok(total)
    }

    /// Adds `scale · ∇_W log π(response | cond)` into `grad`; returns the log-probability.
    pub fn accumulate_logprob_grad(
        &self,
        response: &[u32],
        cond: &Conditioning<'_>,
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        if grad.len() != self.weights.len() {
            return Err(PolicyError::Dimension {
                field: "gradient",
                got: grad.len(),
                expected: self.weights.len(),
            });
        }
        let v = self.dims.vocab_size;
        let d = self.dims.input_dim();
        let mut dense_coef = alloc::vec![0.0; v];
        let mut total = 0.0;
        let x = self.walk(response, cond, |t, lp, cols| {
            let y = response[t] as usize;
            total += lp[y];
            for o in 0..v {
                let r = if o == y { 1.0 } else { 0.0 } - libm::exp(lp[o]);
                dense_coef[o] += r;
                for c in cols {
                    grad[o * d + c] += scale * r;
                }
            }
        })?;
        for o in 0..v {
            let c = scale * dense_coef[o];
            if c != 0.0 {
                for (k, xv) in x.iter().enumerate() {
                    grad[o * d + k] += c * xv;
                }
            }
        }
        Ok(total)
    }
}

impl ConditionalPolicy for PolicyModel {
    fn sequence_logprob(&self, response: &[u32], cond: &Conditioning<'_>) -> core::result::Result<f64, PrefError> {
        self.logprob(response, cond).map_err(|e| match e {
            PolicyError::Pref(p) => p,
            other => PrefError::Policy(alloc::string::ToString::to_string(&other)),
        })
    }
}
