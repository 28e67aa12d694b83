//! Gaver–Stehfest inversion of real Laplace transforms.

use alloc::vec::Vec;

#[allow(unused_imports)]
use crate::math::Float;

/// Stehfest weights for an even number of terms `n`.
#[derive(Clone, Debug)]
pub struct Stehfest {
    weights: Vec<f64>,
}

impl Stehfest {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n % 2 == 0, "Stehfest order must be even");
        let half = n / 2;
        let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product::<f64>() };
        let weights = (1..=n)
            .map(|k| {
                let mut s = 0.0;
                for j in k.div_ceil(2)..=k.min(half) {
                    s += (j as f64).powi(half as i32) * fact(2 * j)
                        / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
                }
                if (half + k) % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self { weights }
    }

    pub fn order(&self) -> usize {
        self.weights.len()
    }

    /// Sum of absolute weights; bounds the amplification of transform errors.
    pub fn condition(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Approximates `f(t)` from its transform `F(s) = ∫ e^{-st} f(t) dt`.
    pub fn invert<F: FnMut(f64) -> f64>(&self, mut transform: F, t: f64) -> f64 {
        let a = core::f64::consts::LN_2 / t;
        self.weights
            .iter()
            .enumerate()
            .map(|(k, w)| w * transform(a * (k + 1) as f64))
            .sum::<f64>()
            * a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_zero() {
        // Stehfest weights annihilate constants: Σ V_k = 0
        let s = Stehfest::new(14);
        let sum: f64 = s.weights.iter().sum();
        assert!(sum.abs() < 1e-6 * s.condition());
    }

    #[test]
    fn inverts_elementary_transforms() {
        let s = Stehfest::new(14);
        for &t in &[0.01, 0.5, 2.0, 30.0] {
            let lin = s.invert(|p| 1.0 / (p * p), t);
            assert!((lin / t - 1.0).abs() < 1e-6, "t={t} {lin}");
            let ex = s.invert(|p| 1.0 / (p + 1.0), t);
            assert!((ex - (-t).exp()).abs() < 1e-3 * (1.0 + (-t).exp()), "t={t}");
            // sqrt(t) / Γ(3/2) <-> p^{-3/2}
            let sq = s.invert(|p| p.powf(-1.5), t);
            let want = t.sqrt() / crate::math::gamma(1.5);
            assert!((sq / want - 1.0).abs() < 1e-5, "t={t}");
        }
    }
}
