//! Seeded synthetic preference sets for training checks and experiments.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::ModelDims;
use crate::prefcore::PreferenceRecord;
use crate::rng::{self, ChaCha8Rng};
use crate::TaskKind;

const CATEGORIES: [&str; 4] = ["Existential", "Localization", "Temporal", "World Knowledge"];

/// A latent-class world: each class has visual and audio prototypes and a
/// response template. The winning response is the template of the class the
/// conditioning came from, the losing one belongs to another class.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub dims: ModelDims,
    pub classes: usize,
    pub response_len: usize,
    pub question_len: usize,
    /// Half-width of the uniform noise added to prototypes.
    pub noise: f64,
    pub prototype_scale: f64,
    /// Task kinds assigned round-robin.
    pub kinds: Vec<TaskKind>,
    /// Fixes prototypes and templates; sampling seeds only vary the draws.
    pub world_seed: u64,
}

impl SyntheticSpec {
    pub fn new(dims: ModelDims) -> Self {
        Self {
            dims,
            classes: 4,
            response_len: 3,
            question_len: 2,
            noise: 0.3,
            prototype_scale: 1.5,
            kinds: TaskKind::ALL.to_vec(),
            world_seed: 0x5eed,
        }
    }
}

struct World {
    visual: Vec<Vec<f64>>,
    audio: Vec<Vec<f64>>,
    templates: Vec<Vec<u32>>,
}

fn uniform_vec(r: &mut ChaCha8Rng, n: usize, half: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-half..=half)).collect()
}

fn world(spec: &SyntheticSpec) -> World {
    let mut r = rng::seeded(rng::derive_seed(spec.world_seed, "synthetic-world"));
    let f = spec.dims.feature_dim;
    let visual = (0..spec.classes).map(|_| uniform_vec(&mut r, f, spec.prototype_scale)).collect();
    let audio = (0..spec.classes).map(|_| uniform_vec(&mut r, f, spec.prototype_scale)).collect();
    let mut templates: Vec<Vec<u32>> = Vec::new();
    while templates.len() < spec.classes {
        let t: Vec<u32> = (0..spec.response_len)
            .map(|_| r.random_range(0..spec.dims.vocab_size as u32))
            .collect();
        if !templates.contains(&t) {
            templates.push(t);
        }
    }
    World {
        visual,
        audio,
        templates,
    }
}

fn jitter(r: &mut ChaCha8Rng, proto: &[f64], noise: f64) -> Vec<f64> {
    proto.iter().map(|p| p + r.random_range(-noise..=noise)).collect()
}

/// `n` records whose preferences are recoverable from the conditioning.
/// MVT/MAT records get an all-zero losing vector; MVIT/MAIT/COT-Swap get
/// another class's prototype.
pub fn separable_dataset(spec: &SyntheticSpec, n: usize, seed: u64) -> Vec<PreferenceRecord> {
    let w = world(spec);
    let mut r = rng::seeded(rng::derive_seed(seed, "synthetic-sample"));
    let f = spec.dims.feature_dim;
    (0..n)
        .map(|i| {
            let kind = spec.kinds[i % spec.kinds.len()];
            let k = r.random_range(0..spec.classes);
            let other = (k + 1 + r.random_range(0..spec.classes - 1)) % spec.classes;
            let question = (0..spec.question_len)
                .map(|_| r.random_range(0..spec.dims.vocab_size as u32))
                .collect();
            let visual_win = jitter(&mut r, &w.visual[k], spec.noise);
            let audio_win = jitter(&mut r, &w.audio[k], spec.noise);
            let visual_lose = match kind {
                TaskKind::Mvt => Some(alloc::vec![0.0; f]),
                k2 if k2.switch_eta() => Some(jitter(&mut r, &w.visual[other], spec.noise)),
                _ => None,
            };
            let audio_lose = match kind {
                TaskKind::Mat => Some(alloc::vec![0.0; f]),
                k2 if k2.switch_gamma() => Some(jitter(&mut r, &w.audio[other], spec.noise)),
                _ => None,
            };
            PreferenceRecord {
                id: format!("syn-{seed}-{i}"),
                question,
                win_response: w.templates[k].clone(),
                lose_response: w.templates[other].clone(),
                visual_win,
                visual_lose,
                audio_win,
                audio_lose,
                task_kind: kind,
                category: String::from(CATEGORIES[k % CATEGORIES.len()]),
            }
        })
        .collect()
}

pub const HEAD: &str = "head";
pub const TAIL: &str = "tail";

/// Two-category text-only set with opposing preferences. Head records prefer
/// response X over Y, tail records prefer Y over X; the categories differ only
/// by a weak signal on the first visual feature, so a shared policy has to
/// trade one off against the other.
pub fn two_category_dataset(
    dims: ModelDims,
    tail_fraction: f64,
    n: usize,
    seed: u64,
) -> Vec<PreferenceRecord> {
    let mut r = rng::seeded(rng::derive_seed(seed, "two-category"));
    let x: Vec<u32> = alloc::vec![1, 2];
    let y: Vec<u32> = alloc::vec![3, 0];
    let f = dims.feature_dim;
    let tail_count = libm::round(tail_fraction * n as f64) as usize;
    (0..n)
        .map(|i| {
            let is_tail = i < tail_count;
            let mut visual_win = uniform_vec(&mut r, f, 1.0);
            visual_win[0] += if is_tail { -0.25 } else { 0.25 };
            let audio_win = uniform_vec(&mut r, f, 1.0);
            let (win, lose) = if is_tail { (y.clone(), x.clone()) } else { (x.clone(), y.clone()) };
            PreferenceRecord {
                id: format!("two-{seed}-{i}"),
                question: alloc::vec![0],
                win_response: win,
                lose_response: lose,
                visual_win,
                visual_lose: None,
                audio_win,
                audio_lose: None,
                task_kind: TaskKind::Mcit,
                category: String::from(if is_tail { TAIL } else { HEAD }),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            vocab_size: 8,
            feature_dim: 4,
            context_window: 1,
        }
    }

    #[test]
    fn records_are_valid_and_deterministic() {
        let spec = SyntheticSpec::new(dims());
        let a = separable_dataset(&spec, 27, 3);
        assert_eq!(a, separable_dataset(&spec, 27, 3));
        assert_ne!(a, separable_dataset(&spec, 27, 4));
        for rec in &a {
            rec.validate(4).unwrap();
        }
        let mvt = a.iter().find(|r| r.task_kind == TaskKind::Mvt).unwrap();
        assert!(mvt.visual_lose.as_ref().unwrap().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn two_category_split() {
        let d = two_category_dataset(dims(), 0.1, 200, 1);
        assert_eq!(d.iter().filter(|r| r.category == TAIL).count(), 20);
        d.iter().for_each(|r| r.validate(4).unwrap());
    }
}
