//! Pruitt's function and its companions, the infima `𝓘`, `𝓙`, and
//! empirical weak scaling indices of `ψ`.
//!
//! For `r > 0`:
//! `K(r) = ω_d r^{-2} ∫_0^r ρ^{d+1} ν(ρ) dρ`, `L(r) = ω_d ∫_r^∞ ρ^{d-1} ν(ρ) dρ`
//! and `h(r) = σ² d / r² + K(r) + L(r)`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{log_grid, log_space, ls_slope, sphere_area, LogLogTable, PI};
use crate::model::LevyModel;
use crate::quad::{integrate, integrate_pieces, Integral, Tolerance};
use crate::renewal::RenewalTable;

/// `h(r)` together with its two jump parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pruitt {
    pub h: f64,
    pub k: f64,
    pub l: f64,
}

fn quad_tol(model: &LevyModel) -> Tolerance {
    Tolerance::new(0.0, model.tolerance().rel.min(1e-9))
}

/// `ω_d ∫_a^b ρ^{d-1} ν(ρ) dρ`, the Lévy measure of the shell `a < |z| < b`.
pub fn shell_mass(model: &LevyModel, a: f64, b: f64) -> Result<f64> {
    let nu = model.nu();
    if nu.is_zero() {
        return Ok(0.0);
    }
    let b = b.min(nu.support());
    if !(b > a) {
        return Ok(0.0);
    }
    let df = model.dimension() as f64;
    let i = integrate_pieces(
        |p| p.powf(df - 1.0) * nu.eval(p),
        a,
        b,
        &nu.breakpoints(),
        quad_tol(model),
    )?;
    Ok(sphere_area(model.dimension()) * i.value)
}

/// `L(r)`, the Lévy measure of `{|z| ≥ r}`.
pub fn tail_l(model: &LevyModel, r: f64) -> Result<f64> {
    shell_mass(model, r, f64::INFINITY)
}

/// `K(r)`.
pub fn inner_k(model: &LevyModel, r: f64) -> Result<f64> {
    let nu = model.nu();
    if nu.is_zero() {
        return Ok(0.0);
    }
    let df = model.dimension() as f64;
    let b = r.min(nu.support());
    let i = integrate_pieces(
        |p| p.powf(df + 1.0) * nu.eval(p),
        0.0,
        b,
        &nu.breakpoints(),
        quad_tol(model),
    )?;
    Ok(sphere_area(model.dimension()) * i.value / (r * r))
}

/// Pruitt's function with `K` and `L`.
pub fn pruitt(model: &LevyModel, r: f64) -> Result<Pruitt> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "must be positive and finite"));
    }
    let s = model.sigma();
    let k = inner_k(model, r)?;
    let l = tail_l(model, r)?;
    Ok(Pruitt {
        h: s * s * model.dimension() as f64 / (r * r) + k + l,
        k,
        l,
    })
}

pub fn pruitt_h(model: &LevyModel, r: f64) -> Result<f64> {
    pruitt(model, r).map(|p| p.h)
}

/// `∫_0^{π/2} cos^n φ dφ`.
fn wallis(n: f64) -> f64 {
    crate::math::gamma((n + 1.0) / 2.0) * PI.sqrt() / (2.0 * crate::math::gamma(n / 2.0 + 1.0))
}

/// `E[(q T²) ∧ 1]` for `T` the first coordinate of a uniform point on the
/// unit sphere of `R^d`.
pub fn truncated_coordinate_moment(d: usize, q: f64) -> f64 {
    if d == 1 {
        return q.min(1.0);
    }
    if q <= 1.0 {
        return q / d as f64;
    }
    // T = sin φ, φ ∈ (−π/2, π/2) with density ∝ cos^{d−2} φ
    let n = d as f64 - 2.0;
    let a = (1.0 / q.sqrt()).asin();
    let tol = Tolerance::new(1e-15, 1e-12);
    let inner = integrate(|p: f64| p.sin().powi(2) * p.cos().powf(n), 0.0, a, tol)
        .map(|i| i.value)
        .unwrap_or(f64::NAN);
    let outer = integrate(|p: f64| p.cos().powf(n), a, PI / 2.0, tol)
        .map(|i| i.value)
        .unwrap_or(f64::NAN);
    (q * inner + outer) / wallis(n)
}

/// `h₁(r) = σ²/r² + ∫ (z₁²/r² ∧ 1) ν(dz)`, the Pruitt function of the first
/// coordinate.
pub fn h1(model: &LevyModel, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::param("r", "must be positive and finite"));
    }
    let d = model.dimension();
    let s = model.sigma();
    let gauss = s * s / (r * r);
    let nu = model.nu();
    if nu.is_zero() {
        return Ok(gauss);
    }
    let k = inner_k(model, r)?;
    if d == 1 {
        return Ok(gauss + k + tail_l(model, r)?);
    }
    let df = d as f64;
    let outer = if r < nu.support() {
        integrate_pieces(
            |p| p.powf(df - 1.0) * nu.eval(p) * truncated_coordinate_moment(d, p * p / (r * r)),
            r,
            nu.support(),
            &nu.breakpoints(),
            quad_tol(model),
        )?
    } else {
        Integral::ZERO
    };
    Ok(gauss + k / df + sphere_area(d) * outer.value)
}

/// Number of log-spaced trial radii in the infima.
pub const INFIMUM_POINTS: usize = 64;
/// Default lower cutoff of the infima, relative to `r`.
pub const RHO_MIN_RELATIVE: f64 = 1e-6;

/// An infimum over a finite grid of radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Infimum {
    pub value: f64,
    pub argmin: f64,
    /// Lower end of the searched radii.
    pub rho_min: f64,
    /// Set when the value vanishes (compactly supported `ν` beyond its range).
    pub degenerate: bool,
}

const DEGENERATE_LEVEL: f64 = 1e-12;

fn infimum(rho_min: f64, rho_max: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Infimum> {
    if !(rho_max > rho_min) {
        return Err(Error::param(
            "rho_min",
            "must be below the upper end of the search range",
        ));
    }
    let mut best = f64::INFINITY;
    let mut arg = rho_max;
    for rho in log_space(rho_min, rho_max, INFIMUM_POINTS) {
        let v = f(rho)?;
        if v < best {
            best = v;
            arg = rho;
        }
    }
    Ok(Infimum {
        value: best,
        argmin: arg,
        rho_min,
        degenerate: !(best > DEGENERATE_LEVEL),
    })
}

/// `𝓘(r) = inf_{ρ ≤ r/2} ν(B_r ∖ B_ρ) V²(ρ)`; `rho_min` defaults to
/// `10⁻⁶ r`.
pub fn script_i(model: &LevyModel, table: &RenewalTable, r: f64, rho_min: Option<f64>) -> Result<Infimum> {
    let lo = rho_min.unwrap_or(RHO_MIN_RELATIVE * r);
    infimum(lo, r / 2.0, |rho| {
        let v = table.v(rho);
        Ok(shell_mass(model, rho, r)? * v * v)
    })
}

/// `𝓙(r) = inf_{ρ ≤ r} L(ρ) V²(ρ)`; `rho_min` defaults to `10⁻⁶ r`.
pub fn script_j(model: &LevyModel, table: &RenewalTable, r: f64, rho_min: Option<f64>) -> Result<Infimum> {
    let lo = rho_min.unwrap_or(RHO_MIN_RELATIVE * r);
    infimum(lo, r, |rho| {
        let v = table.v(rho);
        Ok(tail_l(model, rho)? * v * v)
    })
}

/// Interpolating table of `h` on `[lo, hi]`, used by the step control of
/// the simulator.
pub fn pruitt_table(model: &LevyModel, lo: f64, hi: f64, per_decade: usize) -> Result<LogLogTable> {
    let grid = log_grid(lo, hi, per_decade);
    let h: Vec<f64> = grid.iter().map(|&r| pruitt_h(model, r)).collect::<Result<_>>()?;
    LogLogTable::new(&grid, &h).ok_or_else(|| Error::Degenerate("Pruitt table".into()))
}

/// Empirical weak scaling parameters `ψ(λθ) ≥ c λ^α ψ(θ)` (lower) or
/// `ψ(λθ) ≤ C λ^α ψ(θ)` (upper) for `λ ≥ 1`, `θ ≥ theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub index: f64,
    /// Threshold; `0` means the condition held on the whole tested range.
    pub theta: f64,
    pub constant: f64,
}

/// Upper indices at or above this are reported as "no upper scaling".
pub const WUSC_INDEX_CEILING: f64 = 2.0 - 1e-3;

/// Outcome of the two-stage scaling analysis on a frequency range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub u_range: (f64, f64),
    /// `(u, slope)`: least-squares slope of `log ψ*` over `u·{1, 2, 4, 8}`.
    pub local_slopes: Vec<(f64, f64)>,
    pub wlsc: Option<ScalingParams>,
    pub wusc: Option<ScalingParams>,
    pub notes: Vec<String>,
}

const SCALING_STEPS_PER_OCTAVE: usize = 4;
const WINDOW: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
const VERIFY_PER_DECADE: usize = 8;

impl ScalingReport {
    /// Local index at the low-frequency end.
    pub fn low_end_slope(&self) -> f64 {
        self.local_slopes.first().map(|s| s.1).unwrap_or(f64::NAN)
    }

    /// Local index at the high-frequency end.
    pub fn high_end_slope(&self) -> f64 {
        self.local_slopes.last().map(|s| s.1).unwrap_or(f64::NAN)
    }
}

/// Estimates weak scaling indices of `ψ` on `[u_lo, u_hi]` (at least four
/// decades): local slopes first, then a sweep over `θ` and `λ` fixing the
/// constants. The verdict is empirical over the tested range only.
pub fn scaling_indices(model: &LevyModel, u_lo: f64, u_hi: f64) -> Result<ScalingReport> {
    if !(u_lo > 0.0) || !(u_hi >= u_lo * 1e4 * (1.0 - 1e-12)) {
        return Err(Error::param(
            "u_range",
            "must be positive and span at least four decades",
        ));
    }
    let lw: Vec<f64> = WINDOW.iter().map(|w| w.ln()).collect();
    let octaves = (u_hi / u_lo).log2() - 3.0;
    let steps = (octaves * SCALING_STEPS_PER_OCTAVE as f64).floor() as usize;
    let mut slopes = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let u = u_lo * 2f64.powf(k as f64 / SCALING_STEPS_PER_OCTAVE as f64);
        let ly: Vec<f64> = WINDOW.iter().map(|w| model.psi_star(u * w).ln()).collect();
        slopes.push((u, ls_slope(&lw, &ly)));
    }
    let mut notes = Vec::new();

    // lower scaling: the global minimum slope, else the tail beyond a threshold
    let thetas = log_grid(u_lo, u_hi / 1e2, 1);
    let mut wlsc = None;
    for (i, &theta) in thetas.iter().enumerate() {
        let alpha = slopes
            .iter()
            .filter(|s| s.0 >= theta * (1.0 - 1e-12))
            .map(|s| s.1)
            .fold(f64::INFINITY, f64::min);
        if alpha > 1e-2 {
            let c = sweep(model, theta, u_hi, alpha, f64::min);
            wlsc = Some(ScalingParams {
                index: alpha,
                theta: if i == 0 { 0.0 } else { theta },
                constant: c,
            });
            break;
        }
    }
    if wlsc.is_none() {
        notes.push("no lower scaling: local index near 0 over the tested range".into());
    }

    let mut wusc = None;
    for (i, &theta) in thetas.iter().enumerate() {
        let alpha = slopes
            .iter()
            .filter(|s| s.0 >= theta * (1.0 - 1e-12))
            .map(|s| s.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if alpha < WUSC_INDEX_CEILING {
            let c = sweep(model, theta, u_hi, alpha, f64::max);
            wusc = Some(ScalingParams {
                index: alpha,
                theta: if i == 0 { 0.0 } else { theta },
                constant: c,
            });
            break;
        }
    }
    if wusc.is_none() {
        notes.push("no upper scaling: upper index reaches 2 over the tested range".into());
    } else if wusc.map(|w| w.theta > 0.0).unwrap_or(false) {
        notes.push("upper scaling only above the reported threshold".into());
    }
    Ok(ScalingReport {
        u_range: (u_lo, u_hi),
        local_slopes: slopes,
        wlsc,
        wusc,
        notes,
    })
}

/// Extremal `ψ(λθ') / (λ^α ψ(θ'))` over grid `θ' ≥ θ`, `λ ≥ 1`, `λθ' ≤ u_hi`.
fn sweep(model: &LevyModel, theta: f64, u_hi: f64, alpha: f64, pick: fn(f64, f64) -> f64) -> f64 {
    let pts = log_grid(theta, u_hi, VERIFY_PER_DECADE);
    let vals: Vec<f64> = pts.iter().map(|&u| model.psi_fast(u)).collect();
    let mut acc = 1.0;
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let lambda = pts[j] / pts[i];
            acc = pick(acc, vals[j] / (lambda.powf(alpha) * vals[i]));
        }
    }
    acc
}

/// Checks user-supplied lower scaling parameters on the sampled range.
pub fn verify_wlsc(model: &LevyModel, p: ScalingParams, u_hi: f64) -> bool {
    let lo = if p.theta > 0.0 { p.theta } else { u_hi * 1e-6 };
    sweep(model, lo, u_hi, p.index, f64::min) >= p.constant * (1.0 - 1e-9)
}

/// Checks user-supplied upper scaling parameters on the sampled range.
pub fn verify_wusc(model: &LevyModel, p: ScalingParams, u_hi: f64) -> bool {
    let lo = if p.theta > 0.0 { p.theta } else { u_hi * 1e-6 };
    p.index < 2.0 && sweep(model, lo, u_hi, p.index, f64::max) <= p.constant * (1.0 + 1e-9)
}

/// Tabulated characteristics on a logarithmic radius grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicProfile {
    pub grid: Vec<f64>,
    pub k: Vec<f64>,
    pub l: Vec<f64>,
    pub h: Vec<f64>,
    pub h1: Vec<f64>,
    pub psi_inv: Vec<f64>,
    pub psi_star_inv: Vec<f64>,
    pub v: Vec<f64>,
    pub script_i: Vec<f64>,
    pub script_j: Vec<f64>,
    pub script_j_degenerate: Vec<bool>,
    /// Common lower cutoff of the infima.
    pub rho_min: f64,
    pub scaling: Option<ScalingReport>,
}

impl CharacteristicProfile {
    /// Computes the profile on `grid`; `ψ` and `ψ*` are sampled at `1/r`.
    pub fn compute(model: &LevyModel, table: &RenewalTable, grid: &[f64]) -> Result<Self> {
        if grid.is_empty() || grid.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
            return Err(Error::param("grid", "must be positive and increasing"));
        }
        let rho_min = RHO_MIN_RELATIVE * grid[0];
        let mut p = CharacteristicProfile {
            grid: grid.to_vec(),
            k: Vec::new(),
            l: Vec::new(),
            h: Vec::new(),
            h1: Vec::new(),
            psi_inv: Vec::new(),
            psi_star_inv: Vec::new(),
            v: Vec::new(),
            script_i: Vec::new(),
            script_j: Vec::new(),
            script_j_degenerate: Vec::new(),
            rho_min,
            scaling: None,
        };
        for &r in grid {
            let pr = pruitt(model, r)?;
            p.k.push(pr.k);
            p.l.push(pr.l);
            p.h.push(pr.h);
            p.h1.push(h1(model, r)?);
            p.psi_inv.push(model.psi_fast(1.0 / r));
            p.psi_star_inv.push(model.psi_star(1.0 / r));
            p.v.push(table.v(r));
            p.script_i.push(script_i(model, table, r, Some(rho_min))?.value);
            let j = script_j(model, table, r, Some(rho_min))?;
            p.script_j.push(j.value);
            p.script_j_degenerate.push(j.degenerate);
        }
        let (ulo, uhi) = (1.0 / grid[grid.len() - 1], 1.0 / grid[0]);
        if uhi >= 1e4 * ulo {
            p.scaling = Some(scaling_indices(model, ulo, uhi)?);
        }
        Ok(p)
    }

    /// `h(r) V(r)²` on the grid.
    pub fn h_v_squared(&self) -> Vec<f64> {
        self.h.iter().zip(&self.v).map(|(h, v)| h * v * v).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;

    #[test]
    fn brownian_pruitt() {
        let b = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        let p = pruitt(&b, 2.0).unwrap();
        assert_eq!((p.h, p.k, p.l), (0.25, 0.0, 0.0));
        let b3 = make_model("brownian", 3, &[("sigma", 1.0)]).unwrap();
        assert_eq!(pruitt_h(&b3, 1.0).unwrap(), 3.0);
        assert_eq!(h1(&b3, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn cauchy_pruitt_is_four_over_pi() {
        let c = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let p = pruitt(&c, 1.0).unwrap();
        assert!((p.k - 2.0 / PI).abs() < 1e-10);
        assert!((p.l - 2.0 / PI).abs() < 1e-10);
        assert!((p.h - 4.0 / PI).abs() < 1e-10);
        assert!((h1(&c, 1.0).unwrap() - p.h).abs() < 1e-12);
    }

    #[test]
    fn coordinate_moment_closed_form_in_three_dimensions() {
        for &q in &[1.5, 4.0, 100.0] {
            let want = 1.0 - 2.0 / (3.0 * q.sqrt());
            assert!((truncated_coordinate_moment(3, q) - want).abs() < 1e-12);
        }
        // continuity at q = 1 in several dimensions
        for d in 2..6 {
            let a = truncated_coordinate_moment(d, 1.0);
            let b = truncated_coordinate_moment(d, 1.0 + 1e-9);
            assert!((a - b).abs() < 1e-7, "d={d}");
        }
    }

    #[test]
    fn h1_sandwich() {
        for (d, tag, params) in [
            (3, "isotropic-stable", alloc::vec![("alpha", 1.2)]),
            (2, "tempered-stable", alloc::vec![("alpha", 0.7)]),
            (4, "truncated-stable", alloc::vec![("alpha", 1.5)]),
        ] {
            let m = make_model(tag, d, &params).unwrap();
            for &r in &[0.01, 0.5, 1.0, 3.0, 50.0] {
                let h = pruitt_h(&m, r).unwrap();
                let g = h1(&m, r).unwrap();
                assert!(
                    g <= h * (1.0 + 1e-9) && h <= d as f64 * g * (1.0 + 1e-9),
                    "{tag} r={r}: h1={g} h={h}"
                );
            }
        }
    }

    #[test]
    fn cauchy_script_j_is_constant() {
        let c = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let t = RenewalTable::build(&c, 1e-8, 1e3, 12).unwrap();
        let want = 2.0 / (PI * crate::math::gamma(1.5).powi(2));
        for &r in &[0.1, 1.0, 10.0] {
            let j = script_j(&c, &t, r, None).unwrap();
            assert!((j.value / want - 1.0).abs() < 1e-3, "r={r}: {}", j.value);
            assert!(!j.degenerate);
        }
    }

    #[test]
    fn truncated_script_j_is_degenerate_beyond_support() {
        let m = make_model("truncated-stable", 1, &[("alpha", 1.0), ("radius", 1.0)]).unwrap();
        let t = RenewalTable::build(&m, 1e-7, 1e2, 12).unwrap();
        let j = script_j(&m, &t, 4.0, None).unwrap();
        assert!(j.degenerate);
        assert!(!script_j(&m, &t, 0.5, None).unwrap().degenerate);
    }

    #[test]
    fn stable_scaling_is_exact() {
        let s = make_model("isotropic-stable", 2, &[("alpha", 1.5)]).unwrap();
        let rep = scaling_indices(&s, 1e-3, 1e3).unwrap();
        let lo = rep.wlsc.unwrap();
        let hi = rep.wusc.unwrap();
        assert!((lo.index - 1.5).abs() < 1e-9 && (hi.index - 1.5).abs() < 1e-9);
        assert!((lo.constant - 1.0).abs() < 1e-9 && (hi.constant - 1.0).abs() < 1e-9);
        assert_eq!(lo.theta, 0.0);
        assert!(verify_wlsc(&s, lo, 1e3));
        assert!(!verify_wlsc(
            &s,
            ScalingParams {
                index: 1.6,
                theta: 0.0,
                constant: 1.0
            },
            1e3
        ));
    }

    #[test]
    fn brownian_has_no_upper_scaling() {
        let b = make_model("brownian", 2, &[]).unwrap();
        let rep = scaling_indices(&b, 1e-3, 1e3).unwrap();
        assert!(rep.wusc.is_none());
        assert!((rep.wlsc.unwrap().index - 2.0).abs() < 1e-9);
    }

    #[test]
    fn relativistic_local_indices() {
        let m = make_model("relativistic-stable", 3, &[("alpha", 1.0), ("m", 1.0)]).unwrap();
        let rep = scaling_indices(&m, 1e-2, 1e4).unwrap();
        assert!((rep.low_end_slope() - 2.0).abs() < 1e-2);
        assert!((rep.high_end_slope() - 1.0).abs() < 1e-2);
        let lo = rep.wlsc.unwrap();
        assert!((lo.index - 1.0).abs() < 1e-2);
        let hi = rep.wusc.unwrap();
        assert!(hi.theta > 0.0 && hi.index < 2.0);
    }
}
