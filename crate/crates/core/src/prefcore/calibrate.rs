use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{finite, PrefError, PreferenceRecord, Result};
use crate::numeric::unit_similarity;
use crate::rng;

/// Something a similarity provider can compare.
#[derive(Debug, Clone, Copy)]
pub enum SimItem<'a> {
    Tokens(&'a [u32]),
    Features(&'a [f64]),
}

/// Scores how well `candidate` matches `reference`, in `[0, 1]`.
pub trait SimilarityProvider: Send + Sync {
    fn similarity(&self, reference: SimItem<'_>, candidate: SimItem<'_>) -> f64;
}

/// Cosine similarity mapped to `[0, 1]`. Token sequences are embedded by
/// mean-pooling a fixed, seeded token table.
#[derive(Debug, Clone)]
pub struct CosineSimilarity {
    dim: usize,
    table: Vec<f64>,
}

impl CosineSimilarity {
    pub fn new(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut r = rng::seeded(rng::derive_seed(seed, "similarity-token-table"));
        let table = (0..vocab_size * dim)
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        Self { dim, table }
    }

    fn embed(&self, item: SimItem<'_>) -> Vec<f64> {
        match item {
            SimItem::Features(f) => f.to_vec(),
            SimItem::Tokens(toks) => {
                let mut out = alloc::vec![0.0; self.dim];
                let vocab = self.table.len() / self.dim.max(1);
                let mut n = 0usize;
                for &t in toks {
                    let t = t as usize;
                    if t >= vocab {
                        continue;
                    }
                    n += 1;
                    for (o, w) in out.iter_mut().zip(&self.table[t * self.dim..(t + 1) * self.dim]) {
                        *o += w;
                    }
                }
                if n > 0 {
                    out.iter_mut().for_each(|o| *o /= n as f64);
                }
                out
            }
        }
    }
}

impl SimilarityProvider for CosineSimilarity {
    fn similarity(&self, reference: SimItem<'_>, candidate: SimItem<'_>) -> f64 {
        unit_similarity(&self.embed(reference), &self.embed(candidate))
    }
}

/// Returns the same score for everything; every batch is then degenerate.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSimilarity(pub f64);

impl SimilarityProvider for ConstantSimilarity {
    fn similarity(&self, _: SimItem<'_>, _: SimItem<'_>) -> f64 {
        self.0
    }
}

/// What the text-side score compares each response against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextPairing {
    /// Response vs the presented audio features.
    #[default]
    Audio,
    /// Response vs the question tokens.
    Question,
}

/// Maps per-batch normalized similarity gaps to β via `g(ΔS) = slope·ΔS + intercept`.
#[derive(Clone)]
pub struct BetaCalibrator {
    pub slope: f64,
    pub intercept: f64,
    pub text_similarity: Arc<dyn SimilarityProvider>,
    pub av_similarity: Arc<dyn SimilarityProvider>,
    pub text_pairing: TextPairing,
}

impl core::fmt::Debug for BetaCalibrator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BetaCalibrator")
            .field("slope", &self.slope)
            .field("intercept", &self.intercept)
            .field("text_pairing", &self.text_pairing)
            .finish_non_exhaustive()
    }
}

/// Per-record β for each component. Anchor entries are `None` for records
/// whose task kind leaves that anchor switched off.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchBetas {
    pub y: Vec<f64>,
    pub v: Vec<Option<f64>>,
    pub a: Vec<Option<f64>>,
}

impl BatchBetas {
    /// The same β for every active slot.
    pub fn uniform(batch: &[PreferenceRecord], beta: f64) -> Self {
        Self {
            y: alloc::vec![beta; batch.len()],
            v: batch.iter().map(|r| r.task_kind.switch_eta().then_some(beta)).collect(),
            a: batch.iter().map(|r| r.task_kind.switch_gamma().then_some(beta)).collect(),
        }
    }
}

impl BetaCalibrator {
    pub fn new(
        text_similarity: Arc<dyn SimilarityProvider>,
        av_similarity: Arc<dyn SimilarityProvider>,
    ) -> Self {
        Self {
            slope: 0.9,
            intercept: 0.1,
            text_similarity,
            av_similarity,
            text_pairing: TextPairing::default(),
        }
    }

    /// Cosine-backed calibrator for a toy vocabulary.
    pub fn cosine(vocab_size: usize, feature_dim: usize, seed: u64) -> Self {
        let p = Arc::new(CosineSimilarity::new(vocab_size, feature_dim, seed));
        Self::new(p.clone(), p)
    }

    /// Everything maps to `g(0.5)`.
    pub fn constant() -> Self {
        let p = Arc::new(ConstantSimilarity(0.5));
        Self::new(p.clone(), p)
    }

    pub fn g(&self, normalized: f64) -> f64 {
        self.slope * normalized + self.intercept
    }

    /// β for each pair from raw winning and losing scores.
    pub fn calibrate(&self, win: &[f64], lose: &[f64]) -> Result<Vec<f64>> {
        if win.len() != lose.len() {
            return Err(PrefError::LengthMismatch {
                left: win.len(),
                right: lose.len(),
            });
        }
        if win.is_empty() {
            return Err(PrefError::EmptyBatch);
        }
        let mut delta = Vec::with_capacity(win.len());
        for (w, l) in win.iter().zip(lose) {
            delta.push(finite("score_win", *w)? - finite("score_lose", *l)?);
        }
        let lo = delta.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = delta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        Ok(delta
            .iter()
            .map(|d| {
                let n = if span > 0.0 { ((d - lo) / span).clamp(0.0, 1.0) } else { 0.5 };
                self.g(n)
            })
            .collect())
    }

    fn text_score(&self, rec: &PreferenceRecord, response: &[u32]) -> f64 {
        let reference = match self.text_pairing {
            TextPairing::Audio => SimItem::Features(&rec.audio_win),
            TextPairing::Question => SimItem::Tokens(&rec.question),
        };
        self.text_similarity.similarity(reference, SimItem::Tokens(response))
    }

    fn av_score(&self, visual: &[f64], audio: &[f64]) -> f64 {
        self.av_similarity
            .similarity(SimItem::Features(visual), SimItem::Features(audio))
    }

    /// β for every record and component. Anchor βs are normalized over the
    /// sub-batch where that anchor is switched on.
    pub fn batch_betas(&self, batch: &[PreferenceRecord]) -> Result<BatchBetas> {
        if batch.is_empty() {
            return Err(PrefError::EmptyBatch);
        }
        let (tw, tl): (Vec<f64>, Vec<f64>) = batch
            .iter()
            .map(|r| (self.text_score(r, &r.win_response), self.text_score(r, &r.lose_response)))
            .unzip();
        let y = self.calibrate(&tw, &tl)?;

        let mut v = alloc::vec![None; batch.len()];
        let mut a = alloc::vec![None; batch.len()];
        let vis: Vec<usize> = (0..batch.len()).filter(|&i| batch[i].task_kind.switch_eta()).collect();
        if !vis.is_empty() {
            let mut w = Vec::new();
            let mut l = Vec::new();
            for &i in &vis {
                let r = &batch[i];
                let lose = r.visual_lose.as_deref().ok_or_else(|| r.missing("visual"))?;
                w.push(self.av_score(&r.visual_win, &r.audio_win));
                l.push(self.av_score(lose, &r.audio_win));
            }
            for (i, b) in vis.iter().zip(self.calibrate(&w, &l)?) {
                v[*i] = Some(b);
            }
        }
        let aud: Vec<usize> = (0..batch.len()).filter(|&i| batch[i].task_kind.switch_gamma()).collect();
        if !aud.is_empty() {
            let mut w = Vec::new();
            let mut l = Vec::new();
            for &i in &aud {
                let r = &batch[i];
                let lose = r.audio_lose.as_deref().ok_or_else(|| r.missing("audio"))?;
                w.push(self.av_score(&r.visual_win, &r.audio_win));
                l.push(self.av_score(&r.visual_win, lose));
            }
            for (i, b) in aud.iter().zip(self.calibrate(&w, &l)?) {
                a[*i] = Some(b);
            }
        }
        Ok(BatchBetas { y, v, a })
    }
}

/// Per-sample β from batch scores: min-max normalize `ΔS` over the batch,
/// then apply `g`. A batch whose gaps are all equal maps to `g(0.5)`.
pub fn calibrate_beta(win: &[f64], lose: &[f64], cal: &BetaCalibrator) -> Result<Vec<f64>> {
    cal.calibrate(win, lose)
}
