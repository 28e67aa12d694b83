//! Increment samplers: exact for Gaussian and stable laws, otherwise a
//! Gaussian small-jump part plus compound-Poisson large jumps.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::characteristics::{inner_k, tail_l};
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{log_grid, LogLogTable, PI};
use crate::model::{Family, FamilySpec, LevyModel};

/// Draws `X_dt` for a given model.
#[derive(Clone, Debug)]
pub enum IncrementSampler {
    /// `ψ(u) = σ²u²`: each coordinate is `N(0, 2σ² dt)`.
    Gaussian { dimension: usize, sigma: f64 },
    /// `ψ(u) = σ²u² + u^α`, sampled exactly.
    Stable { dimension: usize, alpha: f64, sigma: f64 },
    /// Gaussian with per-coordinate variance `gauss_rate · dt` plus
    /// `Poisson(rate · dt)` jumps with radii beyond `epsilon`.
    CompoundPoisson {
        dimension: usize,
        epsilon: f64,
        gauss_rate: f64,
        rate: f64,
        radii: Arc<RadiusTable>,
    },
}

/// Inverse transform for the jump radius: `L(r) = u L(ε)`.
#[derive(Clone, Debug)]
pub struct RadiusTable {
    /// `r` as a function of `L(r)` (log-log, increasing in `L`).
    by_tail: LogLogTable,
    tail_at_epsilon: f64,
    support: f64,
}

impl RadiusTable {
    fn new(model: &LevyModel, epsilon: f64) -> Result<Self> {
        let support = model.nu().support();
        let l_eps = tail_l(model, epsilon)?;
        if !(l_eps > 0.0) {
            return Err(Error::param("epsilon", "no jumps beyond the cutoff"));
        }
        let hi = if support.is_finite() {
            support * (1.0 - 1e-9)
        } else {
            epsilon * 1e12
        };
        let mut r_pts = Vec::new();
        let mut l_pts = Vec::new();
        for r in log_grid(epsilon, hi, 16) {
            let l = tail_l(model, r)?;
            if !(l > 1e-15 * l_eps) {
                break;
            }
            r_pts.push(r);
            l_pts.push(l);
        }
        if r_pts.len() < 3 {
            return Err(Error::param("epsilon", "cutoff too close to the support bound"));
        }
        r_pts.reverse();
        l_pts.reverse();
        // strictly increasing abscissae for the table
        let mut xs: Vec<f64> = Vec::with_capacity(l_pts.len());
        let mut ys: Vec<f64> = Vec::with_capacity(r_pts.len());
        for (l, r) in l_pts.into_iter().zip(r_pts) {
            if xs.last().map(|p| l > *p).unwrap_or(true) {
                xs.push(l);
                ys.push(r);
            }
        }
        let by_tail = LogLogTable::new(&xs, &ys).ok_or(Error::Degenerate("jump radius table".into()))?;
        Ok(Self {
            by_tail,
            tail_at_epsilon: l_eps,
            support,
        })
    }

    /// Radius with tail mass `u · L(ε)`, `u ∈ (0, 1]`.
    pub fn radius(&self, u: f64) -> f64 {
        self.by_tail.eval(u * self.tail_at_epsilon).min(self.support)
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Symmetric α-stable variable with `E e^{iuX} = e^{-|u|^α}`
/// (Chambers–Mallows–Stuck).
pub fn symmetric_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * ((v - alpha * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Positive β-stable variable with `E e^{-λA} = e^{-λ^β}`, `β ∈ (0, 1)`
/// (Kanter's representation).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u: f64 = loop {
        let u = rng.random::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let num = (beta * PI * u).sin() * ((1.0 - beta) * PI * u).sin().powf((1.0 - beta) / beta);
    num / ((PI * u).sin().powf(1.0 / beta) * e.powf((1.0 - beta) / beta))
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let limit = (-mean).exp();
        let mut k = 0;
        let mut p = rng.random::<f64>();
        while p > limit {
            k += 1;
            p *= rng.random::<f64>();
        }
        return k;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Default cutoff: with `σ > 0`, the largest `ε` whose small-jump variance
/// is at most a tenth of the Gaussian one; otherwise `10⁻³ · scale`.
pub fn default_epsilon(model: &LevyModel, scale: f64) -> Result<f64> {
    let s = model.sigma();
    let fallback = 1e-3 * scale;
    if s == 0.0 || model.nu().is_zero() {
        return Ok(fallback);
    }
    let d = model.dimension() as f64;
    let small_var = |e: f64| -> Result<f64> { Ok(inner_k(model, e)? * e * e / d) };
    let target = 0.1 * 2.0 * s * s;
    let (mut lo, mut hi) = ((1e-12 * scale).ln(), scale.ln());
    if small_var(hi.exp())? <= target {
        return Ok(scale);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if small_var(mid.exp())? <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

impl IncrementSampler {
    /// Picks the exact sampler when the family admits one, otherwise the
    /// compound-Poisson approximation with cutoff `epsilon`.
    pub fn for_model(model: &LevyModel, epsilon: f64) -> Result<Self> {
        let d = model.dimension();
        if model.nu().is_zero() {
            return Ok(IncrementSampler::Gaussian {
                dimension: d,
                sigma: model.sigma(),
            });
        }
        let exact_alpha = match model.family() {
            Family::Catalogue(FamilySpec::IsotropicStable { alpha })
            | Family::Catalogue(FamilySpec::StableBrownian { alpha }) => Some(*alpha),
            Family::Catalogue(FamilySpec::RelativisticStable { alpha, m }) if *m == 0.0 => Some(*alpha),
            _ => None,
        };
        if let Some(alpha) = exact_alpha {
            return Ok(IncrementSampler::Stable {
                dimension: d,
                alpha,
                sigma: model.sigma(),
            });
        }
        if !(epsilon > 0.0) {
            return Err(Error::param("epsilon", "must be positive"));
        }
        let radii = RadiusTable::new(model, epsilon)?;
        let s = model.sigma();
        let small = inner_k(model, epsilon)? * epsilon * epsilon / d as f64;
        Ok(IncrementSampler::CompoundPoisson {
            dimension: d,
            epsilon,
            gauss_rate: 2.0 * s * s + small,
            rate: radii.tail_at_epsilon,
            radii: Arc::new(radii),
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            IncrementSampler::Gaussian { dimension, .. }
            | IncrementSampler::Stable { dimension, .. }
            | IncrementSampler::CompoundPoisson { dimension, .. } => *dimension,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, IncrementSampler::CompoundPoisson { .. })
    }

    /// Writes `X_dt` into `out` (length `d`).
    pub fn sample<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) {
        match self {
            IncrementSampler::Gaussian { sigma, .. } => {
                let sd = (2.0 * dt).sqrt() * sigma;
                for o in out.iter_mut() {
                    *o = sd * normal(rng);
                }
            }
            IncrementSampler::Stable {
                dimension,
                alpha,
                sigma,
            } => {
                let scale = dt.powf(1.0 / alpha);
                if *dimension == 1 {
                    out[0] = scale * symmetric_stable(*alpha, rng);
                } else {
                    // sub-Gaussian: sqrt(A) G with G ~ N(0, 2I)
                    let a = positive_stable(alpha / 2.0, rng);
                    let sd = scale * (2.0 * a).sqrt();
                    for o in out.iter_mut() {
                        *o = sd * normal(rng);
                    }
                }
                if *sigma > 0.0 {
                    let sd = (2.0 * dt).sqrt() * sigma;
                    for o in out.iter_mut() {
                        *o += sd * normal(rng);
                    }
                }
            }
            IncrementSampler::CompoundPoisson {
                dimension,
                gauss_rate,
                rate,
                radii,
                ..
            } => {
                let sd = (gauss_rate * dt).sqrt();
                for o in out.iter_mut() {
                    *o = sd * normal(rng);
                }
                let n = poisson(rate * dt, rng);
                for _ in 0..n {
                    let u = 1.0 - rng.random::<f64>();
                    let r = radii.radius(u);
                    if *dimension == 1 {
                        out[0] += if rng.random::<bool>() { r } else { -r };
                    } else {
                        let mut dir = [0.0f64; 16];
                        let dir: &mut [f64] = if *dimension <= 16 {
                            &mut dir[..*dimension]
                        } else {
                            // rare: fall back to a heap buffer
                            return sample_high_dim(out, r, rng);
                        };
                        let mut nn = 0.0;
                        for v in dir.iter_mut() {
                            *v = normal(rng);
                            nn += *v * *v;
                        }
                        let k = r / nn.sqrt();
                        for (o, v) in out.iter_mut().zip(dir.iter()) {
                            *o += k * v;
                        }
                    }
                }
            }
        }
    }
}

fn sample_high_dim<R: Rng + ?Sized>(out: &mut [f64], r: f64, rng: &mut R) {
    let dir: Vec<f64> = (0..out.len()).map(|_| normal(rng)).collect();
    let nn: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (o, v) in out.iter_mut().zip(&dir) {
        *o += r * v / nn;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_stable_laplace_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &beta in &[0.25, 0.5, 0.75] {
            let n = 200_000;
            let mut s = 0.0;
            for _ in 0..n {
                s += (-positive_stable(beta, &mut rng)).exp();
            }
            let m = s / n as f64;
            assert!((m - (-1.0f64).exp()).abs() < 4e-3, "β={beta}: {m}");
        }
    }

    #[test]
    fn gaussian_variance() {
        let m = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        let s = IncrementSampler::for_model(&m, 1e-3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut out = [0.0];
        let n = 100_000;
        let mut v = 0.0;
        for _ in 0..n {
            s.sample(1.0, &mut rng, &mut out);
            v += out[0] * out[0];
        }
        assert!((v / n as f64 - 2.0).abs() < 0.05);
    }

    #[test]
    fn radius_table_inverts_tail() {
        let m = make_model("tempered-stable", 3, &[("alpha", 1.0)]).unwrap();
        let t = RadiusTable::new(&m, 1e-3).unwrap();
        for &u in &[1.0, 0.5, 1e-2, 1e-5] {
            let r = t.radius(u);
            let l = tail_l(&m, r).unwrap();
            assert!((l / (u * t.tail_at_epsilon) - 1.0).abs() < 1e-4, "u={u}");
        }
        let m = make_model("truncated-stable", 2, &[("alpha", 1.0), ("radius", 1.0)]).unwrap();
        let t = RadiusTable::new(&m, 1e-3).unwrap();
        assert!(t.radius(1e-14) <= 1.0);
    }

    #[test]
    fn default_epsilon_respects_variance_share() {
        let m = make_model("stable-brownian", 2, &[("alpha", 1.0), ("sigma", 1.0)]).unwrap();
        let e = default_epsilon(&m, 1.0).unwrap();
        let v = inner_k(&m, e).unwrap() * e * e / 2.0;
        assert!((v / 0.2 - 1.0).abs() < 1e-6, "{e} {v}");
        let t = make_model("tempered-stable", 3, &[("alpha", 1.0)]).unwrap();
        assert_eq!(default_epsilon(&t, 2.0).unwrap(), 2e-3);
    }
}
