//! Log-space helpers shared by the loss and policy code.

use libm::{exp, log, log1p};

/// `log σ(x)` without overflow for large |x|.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -log1p(exp(-x))
    } else {
        x - log1p(exp(x))
    }
}

/// `σ(x)`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `log(mean(exp(xs)))`, max-shifted. Returns `None` for an empty slice.
pub fn log_mean_exp(xs: &[f64]) -> Option<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() {
        return None;
    }
    let sum: f64 = xs.iter().map(|x| exp(x - max)).sum();
    Some(max + log(sum / xs.len() as f64))
}

/// Softmax of `xs`, max-shifted.
pub fn softmax(xs: &[f64]) -> alloc::vec::Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: alloc::vec::Vec<f64> = xs.iter().map(|x| exp(x - max)).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

/// In-place log-softmax.
pub fn log_softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = xs.iter().map(|x| exp(x - max)).sum();
    let lz = max + log(z);
    xs.iter_mut().for_each(|x| *x -= lz);
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine similarity; `None` when either vector has zero norm or lengths differ.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.is_empty() {
        return None;
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Cosine mapped onto `[0, 1]` via `(1 + cos) / 2`. A zero vector scores the midpoint.
pub fn unit_similarity(a: &[f64], b: &[f64]) -> f64 {
    (1.0 + cosine(a, b).unwrap_or(0.0)) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sigmoid_tails() {
        assert!((log_sigmoid(0.0) - (-core::f64::consts::LN_2)).abs() < 1e-15);
        assert_eq!(log_sigmoid(800.0), 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
    }

    #[test]
    fn log_mean_exp_is_shift_stable() {
        let v = [700.0, 700.0, 700.0];
        assert!((log_mean_exp(&v).unwrap() - 700.0).abs() < 1e-12);
        assert!(log_mean_exp(&[]).is_none());
    }

    #[test]
    fn log_softmax_normalizes() {
        let mut v = [1.0, -2.0, 3.5, 0.0];
        log_softmax_in_place(&mut v);
        let s: f64 = v.iter().map(|x| exp(*x)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_mapping() {
        assert!((unit_similarity(&[1.0, 0.0], &[1.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((unit_similarity(&[1.0, 0.0], &[0.0, 1.0]) - 0.5).abs() < 1e-15);
        assert!(unit_similarity(&[1.0, 0.0], &[-1.0, 0.0]).abs() < 1e-15);
        assert_eq!(unit_similarity(&[0.0, 0.0], &[1.0, 0.0]), 0.5);
    }
}
