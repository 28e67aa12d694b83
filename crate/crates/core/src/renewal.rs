//! Ladder-height exponent `κ`, renewal function `V` and the mean-value
//! constants `H_r`.
//!
//! `κ(ξ) = exp{(1/π) ∫_0^∞ log ψ(ξζ) / (1 + ζ²) dζ}`; with `ζ = e^s` this is
//! `exp{(1/π) ∫_0^∞ [log ψ(ξe^s) + log ψ(ξe^{-s})] / (2 cosh s) ds}`, which is
//! what is integrated. `V` is recovered from `∫_0^∞ e^{-ξx} V(x) dx =
//! 1/(ξκ(ξ))` by Gaver–Stehfest inversion.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::Stehfest;
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{log_grid, LogLogTable, PI};
use crate::model::LevyModel;
use crate::quad::{integrate, Tolerance};

/// Truncation of the symmetrized `κ` integral; the weight is `e^{-s}`.
const KAPPA_S_MAX: f64 = 50.0;

/// `κ(ξ)`, the Laplace exponent of the ascending ladder-height process.
pub fn kappa(model: &LevyModel, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::param("xi", "must be positive and finite"));
    }
    let f = |s: f64| {
        let a = model.psi_fast(xi * s.exp());
        let b = model.psi_fast(xi * (-s).exp());
        (a.ln() + b.ln()) / (2.0 * s.cosh())
    };
    let tol = Tolerance::new(1e-11, 1e-11);
    let i = match integrate(f, 0.0, KAPPA_S_MAX, tol) {
        Ok(i) => i,
        Err(Error::Quadrature { value, error }) if error < 1e-7 => crate::quad::Integral { value, error },
        Err(e) => return Err(e),
    };
    if !i.value.is_finite() {
        return Err(Error::Quadrature {
            value: i.value,
            error: i.error,
        });
    }
    Ok((i.value / PI).exp())
}

/// How a renewal-table entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VMethod {
    LaplaceInversion,
    /// `1/sqrt(ψ*(1/x))`, rescaled to match the nearest inverted value when
    /// one exists.
    Proxy,
}

/// Tabulated renewal function on a logarithmic grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenewalTable {
    pub grid: Vec<f64>,
    pub v: Vec<f64>,
    pub vprime: Vec<f64>,
    /// `1/sqrt(ψ*(1/x))` on the same grid (unscaled).
    pub proxy: Vec<f64>,
    pub method: Vec<VMethod>,
    /// `(ξ, κ(ξ))` at `ξ = 1/x`.
    pub kappa_grid: Vec<(f64, f64)>,
    pub sigma: f64,
    v_table: LogLogTable,
    vp_table: LogLogTable,
}

/// Relative disagreement between Stehfest orders above which an inverted
/// value is rejected.
const INVERSION_AGREEMENT: f64 = 1e-3;

impl RenewalTable {
    /// Builds `V` on `[lo, hi]` with `per_decade` log-spaced points.
    pub fn build(model: &LevyModel, lo: f64, hi: f64, per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::param("grid", "need 0 < lo < hi"));
        }
        Self::on_grid(model, &log_grid(lo, hi, per_decade))
    }

    /// Default range used by the profile and simulation code.
    pub fn standard(model: &LevyModel) -> Result<Self> {
        Self::build(model, 1e-7, 1e5, 24)
    }

    pub fn on_grid(model: &LevyModel, grid: &[f64]) -> Result<Self> {
        if grid.len() < 3 || grid.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(Error::param("grid", "must be positive, increasing, at least 3 points"));
        }
        let main = Stehfest::new(14);
        let check = Stehfest::new(12);
        let transform = |p: f64| -> f64 {
            match kappa(model, p) {
                Ok(k) => 1.0 / (p * k),
                Err(_) => f64::NAN,
            }
        };
        let n = grid.len();
        let mut v = Vec::with_capacity(n);
        let mut method = Vec::with_capacity(n);
        let mut proxy = Vec::with_capacity(n);
        let mut kappa_grid = Vec::with_capacity(n);
        for &x in grid {
            let a = main.invert(transform, x);
            let b = check.invert(transform, x);
            let ok = a.is_finite() && a > 0.0 && ((a - b) / a).abs() < INVERSION_AGREEMENT;
            v.push(if ok { a } else { f64::NAN });
            method.push(if ok { VMethod::LaplaceInversion } else { VMethod::Proxy });
            proxy.push(1.0 / model.psi_star(1.0 / x).sqrt());
            kappa_grid.push((1.0 / x, kappa(model, 1.0 / x).unwrap_or(f64::NAN)));
        }
        // values that break strict monotonicity are treated as unstable
        let mut last = 0.0;
        for i in 0..n {
            if method[i] == VMethod::LaplaceInversion {
                if v[i] <= last {
                    method[i] = VMethod::Proxy;
                    v[i] = f64::NAN;
                } else {
                    last = v[i];
                }
            }
        }
        fill_with_proxy(grid, &mut v, &method, &proxy)?;
        let vprime = log_derivative(grid, &v);
        let sigma = model.sigma();
        let mut vprime = vprime;
        if sigma > 0.0 {
            // V'(0+) = 1/σ and V' ≤ 1/σ
            for d in vprime.iter_mut() {
                *d = d.min(1.0 / sigma);
            }
        }
        if let Some(i) = vprime.iter().position(|d| !(*d > 0.0)) {
            return Err(Error::NonIncreasingRenewal {
                x: grid[i],
                vprime: vprime[i],
            });
        }
        let v_table = LogLogTable::new(grid, &v).ok_or(Error::Degenerate("renewal table".into()))?;
        let vp_table = LogLogTable::new(grid, &vprime).ok_or(Error::Degenerate("renewal derivative table".into()))?;
        Ok(Self {
            grid: grid.to_vec(),
            v,
            vprime,
            proxy,
            method,
            kappa_grid,
            sigma,
            v_table,
            vp_table,
        })
    }

    /// `V(x)`; zero for `x ≤ 0`, power-law extrapolation off the grid.
    pub fn v(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.v_table.eval(x)
        }
    }

    /// `V'(x)` for `x > 0`.
    pub fn vprime(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if self.sigma > 0.0 {
                1.0 / self.sigma
            } else {
                f64::INFINITY
            };
        }
        if x < self.grid[0] && self.sigma > 0.0 {
            return 1.0 / self.sigma;
        }
        self.vp_table.eval(x)
    }

    pub fn x_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Number of grid points that fell back to the proxy.
    pub fn proxy_count(&self) -> usize {
        self.method.iter().filter(|m| **m == VMethod::Proxy).count()
    }

    /// `V'` non-increasing on the grid, up to relative slack `tol`.
    pub fn is_concave(&self, tol: f64) -> bool {
        self.vprime.windows(2).all(|w| w[1] <= w[0] * (1.0 + tol))
    }

    /// `V'/V` non-increasing on the grid, up to relative slack `tol`.
    pub fn is_log_concave(&self, tol: f64) -> bool {
        self.vprime
            .iter()
            .zip(&self.v)
            .map(|(d, v)| d / v)
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + tol))
    }
}

fn fill_with_proxy(grid: &[f64], v: &mut [f64], method: &[VMethod], proxy: &[f64]) -> Result<()> {
    let good: Vec<usize> = (0..v.len())
        .filter(|&i| method[i] == VMethod::LaplaceInversion)
        .collect();
    if good.is_empty() {
        v.copy_from_slice(proxy);
        return Ok(());
    }
    for i in 0..v.len() {
        if method[i] == VMethod::Proxy {
            let j = *good.iter().min_by_key(|&&j| j.abs_diff(i)).unwrap();
            v[i] = proxy[i] * v[j] / proxy[j];
        }
    }
    // rescaled proxy pieces may still disagree with neighbours at the seams
    for i in 1..v.len() {
        if v[i] <= v[i - 1] {
            return Err(Error::InversionUnstable { x: grid[i] });
        }
    }
    Ok(())
}

/// `V'` from central differences of `log V` against `log x`, one-sided at
/// the ends.
fn log_derivative(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    let lx: Vec<f64> = x.iter().map(|a| a.ln()).collect();
    let lv: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    (0..n)
        .map(|i| {
            let slope = if i == 0 {
                (lv[1] - lv[0]) / (lx[1] - lx[0])
            } else if i == n - 1 {
                (lv[n - 1] - lv[n - 2]) / (lx[n - 1] - lx[n - 2])
            } else {
                // nonuniform three-point formula
                let h1 = lx[i] - lx[i - 1];
                let h2 = lx[i + 1] - lx[i];
                (h1 * h1 * (lv[i + 1] - lv[i]) + h2 * h2 * (lv[i] - lv[i - 1])) / (h1 * h2 * (h1 + h2))
            };
            slope * v[i] / x[i]
        })
        .collect()
}

/// Result of the mean-value check `V(z) − V(y) ≤ H_r V'(x)(z − y)` over
/// `x ≤ y < z ≤ 5x ≤ 5r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionA {
    pub r: f64,
    pub h_r: f64,
    /// Triple attaining the maximum.
    pub argmax: (f64, f64, f64),
    pub concave: bool,
    pub log_concave: bool,
    pub triples: usize,
}

impl ConditionA {
    /// The universal constant available when `V` is log-concave.
    pub const LOG_CONCAVE_BOUND: f64 = 5.0;
}

/// Grid points per decade for the deterministic triples.
pub const TRIPLE_GRID_DENSITY: usize = 48;
/// Number of additional random triples.
pub const RANDOM_TRIPLES: usize = 10_000;

/// Empirical minimal `H_r` over the sampled triples.
pub fn condition_a(table: &RenewalTable, r: f64) -> Result<ConditionA> {
    if !(r > 0.0) || 5.0 * r > table.x_max() * (1.0 + 1e-12) || r <= table.x_min() {
        return Err(Error::OutOfRange(alloc::format!(
            "condition A needs [{}, 5r] inside the table, r = {r}",
            table.x_min()
        )));
    }
    if let Some(i) = table.vprime.iter().position(|d| !(*d > 0.0)) {
        return Err(Error::NonIncreasingRenewal {
            x: table.grid[i],
            vprime: table.vprime[i],
        });
    }
    let lo = table.x_min();
    let pts = log_grid(lo, 5.0 * r, TRIPLE_GRID_DENSITY);
    let vals: Vec<f64> = pts.iter().map(|&p| table.v(p)).collect();
    let mut best = 0.0;
    let mut argmax = (r, r, r);
    let mut count = 0;
    let consider = |x: f64, y: f64, z: f64, vy: f64, vz: f64, best: &mut f64, argmax: &mut (f64, f64, f64)| {
        let q = (vz - vy) / (table.vprime(x) * (z - y));
        if q > *best {
            *best = q;
            *argmax = (x, y, z);
        }
    };
    for i in 0..pts.len() {
        let x = pts[i];
        if x > r * (1.0 + 1e-12) {
            break;
        }
        for j in i..pts.len() {
            let y = pts[j];
            if y > 5.0 * x * (1.0 + 1e-12) {
                break;
            }
            for k in j + 1..pts.len() {
                let z = pts[k];
                if z > 5.0 * x * (1.0 + 1e-12) {
                    break;
                }
                consider(x, y, z, vals[j], vals[k], &mut best, &mut argmax);
                count += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x4852);
    let (llo, lr) = (lo.ln(), r.ln());
    for _ in 0..RANDOM_TRIPLES {
        let x = (llo + (lr - llo) * rng.random::<f64>()).exp();
        let a = x * (1.0 + 4.0 * rng.random::<f64>());
        let b = x * (1.0 + 4.0 * rng.random::<f64>());
        let (y, z) = if a < b { (a, b) } else { (b, a) };
        if z <= y {
            continue;
        }
        consider(x, y, z, table.v(y), table.v(z), &mut best, &mut argmax);
        count += 1;
    }
    Ok(ConditionA {
        r,
        h_r: best,
        argmax,
        concave: table.is_concave(1e-4),
        log_concave: table.is_log_concave(1e-4),
        triples: count,
    })
}

/// `condition_a` over increasing radii, made non-decreasing by a running
/// maximum.
pub fn condition_a_profile(table: &RenewalTable, radii: &[f64]) -> Result<Vec<ConditionA>> {
    let mut out: Vec<ConditionA> = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut c = condition_a(table, r)?;
        if let Some(prev) = out.last() {
            if prev.h_r > c.h_r {
                c.h_r = prev.h_r;
                c.argmax = prev.argmax;
            }
        }
        out.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::gamma;
    use crate::model::make_model;

    #[test]
    fn kappa_brownian_and_stable() {
        let b = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        assert!((kappa(&b, 3.0).unwrap() - 3.0).abs() < 1e-9);
        let b2 = make_model("brownian", 1, &[("sigma", 2.0)]).unwrap();
        assert!((kappa(&b2, 0.5).unwrap() - 1.0).abs() < 1e-9);
        let s = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        for &xi in &[1e-3, 1.0, 7.0, 1e3] {
            assert!((kappa(&s, xi).unwrap() / xi.sqrt() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn renewal_brownian_is_linear() {
        let b = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        let t = RenewalTable::build(&b, 1e-2, 1e2, 8).unwrap();
        for (x, v) in t.grid.iter().zip(&t.v) {
            assert!((v / x - 1.0).abs() < 1e-6, "x={x} V={v}");
        }
        for d in &t.vprime {
            assert!((d - 1.0).abs() < 1e-6, "V'={d}");
        }
        assert_eq!(t.proxy_count(), 0);
    }

    #[test]
    fn renewal_stable_closed_form() {
        let s = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let t = RenewalTable::build(&s, 1e-2, 1e2, 8).unwrap();
        let g = gamma(1.5);
        for (x, v) in t.grid.iter().zip(&t.v) {
            assert!((v / (x.sqrt() / g) - 1.0).abs() < 1e-4, "x={x} V={v}");
        }
        assert!(t.is_concave(1e-4));
    }

    #[test]
    fn condition_a_linear_and_concave() {
        let b = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        let t = RenewalTable::build(&b, 1e-3, 1e2, 16).unwrap();
        let c = condition_a(&t, 1.0).unwrap();
        assert!((c.h_r - 1.0).abs() < 1e-4, "{}", c.h_r);
        let s = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let t = RenewalTable::build(&s, 1e-3, 1e2, 16).unwrap();
        let c = condition_a(&t, 1.0).unwrap();
        assert!(c.concave && c.log_concave);
        assert!(c.h_r <= 1.0 + 1e-3, "{}", c.h_r);
    }

    #[test]
    fn condition_a_rejects_uncovered_radius() {
        let b = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        let t = RenewalTable::build(&b, 1e-2, 1e1, 8).unwrap();
        assert!(condition_a(&t, 5.0).is_err());
    }
}
