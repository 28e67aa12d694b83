//! Adaptive quadrature: Gauss–Kronrod (21 point) with bisection for smooth
//! and oscillatory pieces, tanh-sinh for finite intervals with integrable
//! endpoint singularities, and exp-sinh for half-lines.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;

/// Absolute and relative error targets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-9, rel: 1e-7 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }

    /// Same relative target, absolute target scaled (used when an integral
    /// is one piece of a larger sum).
    pub fn with_abs(self, abs: f64) -> Self {
        Self { abs, rel: self.rel }
    }
}

/// Integral value with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl core::ops::Add for Integral {
    type Output = Integral;
    fn add(self, o: Integral) -> Integral {
        Integral {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

impl Integral {
    pub const ZERO: Integral = Integral { value: 0.0, error: 0.0 };

    fn scale(self, c: f64) -> Integral {
        Integral {
            value: self.value * c,
            error: self.error * c.abs(),
        }
    }
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_626_368_899,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One 21-point Gauss–Kronrod panel.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Integral {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let value = kron * h;
    let error = ((kron - gauss) * h).abs();
    Integral { value, error }
}

const MAX_PANELS: usize = 4000;

/// Adaptive Gauss–Kronrod integration over the finite interval `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral::ZERO);
    }
    let first = gk21(&mut f, a, b);
    let mut panels: Vec<(f64, f64, Integral)> = alloc::vec![(a, b, first)];
    let mut total = first;
    while total.error > tol.target(total.value) {
        if panels.len() >= MAX_PANELS {
            return Err(Error::Quadrature {
                value: total.value,
                error: total.error,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .expect("non-empty");
        let (lo, hi, old) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval cannot be split further; accept what we have
            panels.push((lo, hi, old));
            break;
        }
        let left = gk21(&mut f, lo, mid);
        let right = gk21(&mut f, mid, hi);
        total.value += left.value + right.value - old.value;
        total.error += left.error + right.error - old.error;
        panels.push((lo, mid, left));
        panels.push((mid, hi, right));
        if !total.value.is_finite() {
            return Err(Error::Quadrature {
                value: total.value,
                error: total.error,
            });
        }
    }
    // re-sum to shed accumulated cancellation in the running totals
    let value = panels.iter().map(|p| p.2.value).sum();
    let error = panels.iter().map(|p| p.2.error).sum();
    let out = Integral { value, error };
    if out.error > tol.target(out.value) * 10.0 && panels.len() >= MAX_PANELS {
        return Err(Error::Quadrature { value, error });
    }
    Ok(out)
}

const DE_MAX_LEVEL: usize = 12;
const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

/// tanh-sinh quadrature over `[a, b]`; tolerates integrable singularities at
/// either endpoint. The integrand is never evaluated at the endpoints.
pub fn integrate_singular<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if a == b {
        return Ok(Integral::ZERO);
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    // returns weighted contribution at node t (both mirror points if t > 0)
    let mut node = |t: f64| -> f64 {
        let u = HALF_PI * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        let dist = half * 2.0 * e / (1.0 + e); // distance of node from nearest endpoint
        let w = half * HALF_PI * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
        if t == 0.0 {
            return w * f(mid);
        }
        if dist <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let xl = a + dist;
        let xr = b - dist;
        let mut s = 0.0;
        if xl > a && xl < b {
            let v = f(xl);
            if v.is_finite() {
                s += w * v;
            }
        }
        if xr > a && xr < b {
            let v = f(xr);
            if v.is_finite() {
                s += w * v;
            }
        }
        s
    };
    let t_max = 6.5;
    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += node(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut last_err = f64::INFINITY;
    for level in 1..=DE_MAX_LEVEL {
        h *= 0.5;
        let mut add = 0.0;
        let mut k = 1;
        while k as f64 * h <= t_max {
            add += node(k as f64 * h);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        if level >= 3 && err <= tol.target(estimate) {
            return Ok(Integral {
                value: estimate,
                error: err,
            });
        }
        last_err = err;
    }
    Err(Error::Quadrature {
        value: estimate,
        error: last_err,
    })
}

/// exp-sinh quadrature over `[a, ∞)`. `scale` is the length over which the
/// integrand varies near `a` (nodes are placed at `a + scale·e^{π/2·sinh t}`).
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, scale: f64, tol: Tolerance) -> Result<Integral> {
    let mut node = |t: f64| -> f64 {
        let u = HALF_PI * t.sinh();
        if u > 700.0 {
            return 0.0;
        }
        let eu = u.exp();
        let dx = scale * eu;
        let x = a + dx;
        if !(x > a) || !x.is_finite() {
            return 0.0;
        }
        let w = scale * HALF_PI * t.cosh() * eu;
        let v = f(x);
        if v.is_finite() {
            w * v
        } else {
            0.0
        }
    };
    let t_lo = -6.5;
    let t_hi = 6.5;
    let mut h = 0.5;
    let n0 = ((t_hi - t_lo) / h) as i64;
    let mut sum = 0.0;
    for k in 0..=n0 {
        sum += node(t_lo + k as f64 * h);
    }
    let mut estimate = sum * h;
    let mut last_err = f64::INFINITY;
    for level in 1..=DE_MAX_LEVEL {
        h *= 0.5;
        let n = ((t_hi - t_lo) / h) as i64;
        let mut add = 0.0;
        let mut k = 1;
        while k <= n {
            add += node(t_lo + k as f64 * h);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let err = (next - estimate).abs();
        estimate = next;
        if level >= 3 && err <= tol.target(estimate) {
            return Ok(Integral {
                value: estimate,
                error: err,
            });
        }
        last_err = err;
    }
    Err(Error::Quadrature {
        value: estimate,
        error: last_err,
    })
}

/// Integral over `[a, b]` (possibly `b = ∞`) split at `breaks`; pieces
/// touching zero or infinity use the double-exponential rules.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    if !(b > a) {
        return Ok(Integral::ZERO);
    }
    let mut cuts: Vec<f64> = alloc::vec![a];
    cuts.extend(breaks.iter().copied().filter(|c| *c > a && *c < b));
    let mut total = Integral::ZERO;
    let finite_end = if b.is_finite() { b } else { *cuts.last().unwrap() };
    if b.is_finite() {
        cuts.push(b);
    }
    for w in cuts.windows(2) {
        total = total + integrate_singular(&mut f, w[0], w[1], tol)?;
    }
    if !b.is_finite() {
        let scale = if finite_end > 0.0 { finite_end } else { 1.0 };
        total = total + integrate_to_infinity(&mut f, finite_end, scale, tol)?;
    }
    Ok(total)
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the accelerated limit and a crude error estimate.
pub fn wynn_epsilon(partial: &[f64]) -> (f64, f64) {
    let n = partial.len();
    if n < 3 {
        let last = *partial.last().unwrap_or(&0.0);
        let prev = if n == 2 { partial[0] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // e[k] holds column k of the epsilon table for the current diagonal
    let mut prev_col: Vec<f64> = alloc::vec![0.0; n + 1];
    let mut col: Vec<f64> = partial.to_vec();
    let mut best = partial[n - 1];
    let mut best_err = (partial[n - 1] - partial[n - 2]).abs();
    let mut k = 1;
    while col.len() > 1 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let diff = col[i + 1] - col[i];
            let base = prev_col.get(i + 1).copied().unwrap_or(0.0);
            if diff == 0.0 {
                next.push(f64::INFINITY);
            } else {
                next.push(base + 1.0 / diff);
            }
        }
        if k % 2 == 0 && next.len() >= 2 {
            let m = next.len();
            let (a, b) = (next[m - 1], next[m - 2]);
            if a.is_finite() && b.is_finite() {
                let err = (a - b).abs();
                if err < best_err {
                    best = a;
                    best_err = err;
                }
            }
        }
        prev_col = col;
        col = next;
        k += 1;
    }
    (best, best_err)
}

impl Integral {
    pub fn scaled(self, c: f64) -> Integral {
        self.scale(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_polynomial_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - 0.0).abs() < 1e-13);
        let r = integrate(|x| x.sin(), 0.0, core::f64::consts::PI, Tolerance::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 x^{-0.9} dx = 10
        let r = integrate_singular(|x| x.powf(-0.9), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((r.value - 10.0).abs() < 1e-7, "{}", r.value);
        // ∫_{-1}^1 (1-t^2)^{-1/2} = π; nodes closer than machine epsilon to ±1
        // are dropped, which costs about sqrt(2ε)
        let r = integrate_singular(|t| 1.0 / (1.0 - t * t).sqrt(), -1.0, 1.0, Tolerance::new(1e-7, 1e-9)).unwrap();
        assert!((r.value - core::f64::consts::PI).abs() < 1e-7, "{}", r.value);
    }

    #[test]
    fn exp_sinh_algebraic_tail() {
        // ∫_1^∞ x^{-1.5} dx = 2
        let r = integrate_to_infinity(|x| x.powf(-1.5), 1.0, 1.0, Tolerance::new(1e-12, 1e-11)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
        let r = integrate_to_infinity(|x| (-x).exp(), 0.0, 1.0, Tolerance::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pieces_split_at_kink() {
        let f = |x: f64| if x < 1.0 { x } else { 1.0 / (x * x * x) };
        let r = integrate_pieces(f, 0.0, f64::INFINITY, &[1.0], Tolerance::new(1e-12, 1e-12)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // partial sums of ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let partial: Vec<f64> = (1..=15)
            .map(|k| {
                s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                s
            })
            .collect();
        let (v, _) = wynn_epsilon(&partial);
        assert!((v - core::f64::consts::LN_2).abs() < 1e-9, "{v}");
    }
}
