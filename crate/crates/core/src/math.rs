//! Small numeric helpers shared by the modules: gamma function, sphere
//! areas, logarithmic grids and log-log interpolation tables.

use alloc::vec::Vec;
pub use num_traits::Float;

use serde::{Deserialize, Serialize};

pub const PI: f64 = core::f64::consts::PI;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Surface area `ω_d = 2π^{d/2}/Γ(d/2)` of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// `n` points log-spaced from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Log grid from `lo` to `hi` with (at least) `per_decade` points per decade.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10().max(0.0);
    let n = ((decades * per_decade as f64).ceil() as usize + 1).max(2);
    log_space(lo, hi, n)
}

/// Monotone cubic (Fritsch–Carlson) interpolation of `ln y` against `ln x`,
/// extrapolated linearly in log-log coordinates, i.e. as a power law with the
/// end slopes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LogLogTable {
    lx: Vec<f64>,
    ly: Vec<f64>,
    slope: Vec<f64>,
}

impl LogLogTable {
    /// Builds the table; every `x` and `y` must be positive and `x` strictly
    /// increasing.
    pub fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return None;
        }
        if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
            return None;
        }
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        if lx.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let n = lx.len();
        let secant: Vec<f64> = (0..n - 1).map(|i| (ly[i + 1] - ly[i]) / (lx[i + 1] - lx[i])).collect();
        let mut slope = alloc::vec![0.0; n];
        slope[0] = secant[0];
        slope[n - 1] = secant[n - 2];
        for i in 1..n - 1 {
            slope[i] = if secant[i - 1] * secant[i] <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let h0 = lx[i] - lx[i - 1];
                let h1 = lx[i + 1] - lx[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / secant[i - 1] + w2 / secant[i])
            };
        }
        Some(Self { lx, ly, slope })
    }

    pub fn x_min(&self) -> f64 {
        self.lx[0].exp()
    }

    pub fn x_max(&self) -> f64 {
        self.lx[self.lx.len() - 1].exp()
    }

    pub fn len(&self) -> usize {
        self.lx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lx.is_empty()
    }

    /// Local log-log slope at the lower and upper end.
    pub fn end_slopes(&self) -> (f64, f64) {
        let n = self.lx.len();
        let lo = (self.ly[1] - self.ly[0]) / (self.lx[1] - self.lx[0]);
        let hi = (self.ly[n - 1] - self.ly[n - 2]) / (self.lx[n - 1] - self.lx[n - 2]);
        (lo, hi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_ln(x.ln()).exp()
    }

    /// Derivative `dy/dx` of the interpolant.
    pub fn derivative(&self, x: f64) -> f64 {
        let t = x.ln();
        let (ly, dly) = self.eval_ln_with_slope(t);
        ly.exp() * dly / x
    }

    fn eval_ln(&self, t: f64) -> f64 {
        self.eval_ln_with_slope(t).0
    }

    fn eval_ln_with_slope(&self, t: f64) -> (f64, f64) {
        let n = self.lx.len();
        let (lo, hi) = self.end_slopes();
        if t <= self.lx[0] {
            return (self.ly[0] + lo * (t - self.lx[0]), lo);
        }
        if t >= self.lx[n - 1] {
            return (self.ly[n - 1] + hi * (t - self.lx[n - 1]), hi);
        }
        let i = match self
            .lx
            .binary_search_by(|v| v.partial_cmp(&t).unwrap_or(core::cmp::Ordering::Less))
        {
            Ok(i) => return (self.ly[i], self.slope[i]),
            Err(i) => i - 1,
        };
        let h = self.lx[i + 1] - self.lx[i];
        let s = (t - self.lx[i]) / h;
        let (y0, y1) = (self.ly[i], self.ly[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let value = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let dvalue = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (value, dvalue)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn power_law_is_reproduced_exactly() {
        let x = log_space(1e-3, 1e3, 25);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(-1.5)).collect();
        let t = LogLogTable::new(&x, &y).unwrap();
        for probe in [1e-6, 2e-3, 0.7, 13.0, 1e5] {
            let want = 3.0 * probe.powf(-1.5);
            assert!((t.eval(probe) / want - 1.0).abs() < 1e-12);
            let dwant = -4.5 * probe.powf(-2.5);
            assert!((t.derivative(probe) / dwant - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-2, 1e2, 10);
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 1e-2);
        assert_eq!(*g.last().unwrap(), 1e2);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(LogLogTable::new(&[1.0, 1.0], &[1.0, 2.0]).is_none());
        assert!(LogLogTable::new(&[1.0, 2.0], &[0.0, 2.0]).is_none());
    }
}
