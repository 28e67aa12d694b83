//! Special functions: the spherical average of `cos⟨ξ, x⟩` and the modified
//! Bessel function `K_ν`.

use crate::math::{gamma, Float};
use crate::quad::{integrate, Tolerance};

/// Below this argument the radial kernel is summed from its power series;
/// above it the closed trigonometric forms (odd `d`) or `libm` Bessel
/// functions (even `d`) are used.
pub const SERIES_SWITCH: f64 = 8.0;

/// `1 − Λ_d(s)` where `Λ_d(s) = Γ(d/2) (2/s)^{d/2-1} J_{d/2-1}(s)` is the
/// average of `cos(s·θ_1)` over the unit sphere in `R^d`.
pub fn one_minus_radial_kernel(d: usize, s: f64) -> f64 {
    let s = s.abs();
    if s < SERIES_SWITCH {
        // 1 − ₀F₁(; d/2; −s²/4), summed without the leading 1
        let q = -0.25 * s * s;
        let b = d as f64 / 2.0;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            term *= q / (kf * (b + kf - 1.0));
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        return -sum;
    }
    1.0 - radial_kernel_large(d, s)
}

/// `Λ_d(s)` itself.
pub fn radial_kernel(d: usize, s: f64) -> f64 {
    if s.abs() < SERIES_SWITCH {
        1.0 - one_minus_radial_kernel(d, s)
    } else {
        radial_kernel_large(d, s.abs())
    }
}

fn radial_kernel_large(d: usize, s: f64) -> f64 {
    match d {
        1 => s.cos(),
        2 => libm::j0(s),
        3 => s.sin() / s,
        _ if d % 2 == 1 => {
            // Λ_{2l+3}(s) = (2l+1)!! j_l(s) / s^l, upward recurrence (s > l here)
            let l = (d - 3) / 2;
            let mut j_prev = s.sin() / s;
            let mut j_cur = s.sin() / (s * s) - s.cos() / s;
            if l == 0 {
                return j_prev;
            }
            for n in 1..l {
                let next = (2 * n + 1) as f64 / s * j_cur - j_prev;
                j_prev = j_cur;
                j_cur = next;
            }
            let mut dfact = 1.0;
            let mut k = 2 * l + 1;
            while k > 1 {
                dfact *= k as f64;
                k -= 2;
            }
            dfact * j_cur / s.powi(l as i32)
        }
        _ => {
            let n = (d - 2) / 2;
            gamma(n as f64 + 1.0) * (2.0 / s).powi(n as i32) * libm::jn(n as i32, s)
        }
    }
}

/// Decay envelope of `|Λ_d(s)|` for large `s`, used to bound oscillatory
/// tails.
pub fn radial_kernel_envelope(d: usize, s: f64) -> f64 {
    if d == 1 || s < 1.0 {
        1.0
    } else {
        let nu = d as f64 / 2.0 - 1.0;
        // |J_ν(s)| ≤ sqrt(2/(π s)) asymptotically
        (gamma(nu + 1.0) * (2.0 / s).powf(nu) * (2.0 / (core::f64::consts::PI * s)).sqrt()).min(1.0)
    }
}

/// Modified Bessel function of the second kind `K_ν(z)` for real `ν` and
/// `z > 0`, from `K_ν(z) = ∫_0^∞ e^{−z cosh t} cosh(νt) dt`.
pub fn bessel_k(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0);
    let nu = nu.abs();
    // integrate e^{-z(cosh t - 1)} cosh(νt) and restore the e^{-z} factor;
    // the upper limit leaves a relative remainder below e^{-40}
    let mut upper = 1.0;
    while z * (upper.cosh() - 1.0) - nu * upper < 40.0 {
        upper *= 1.5;
    }
    let r = integrate(
        |t| (-z * (t.cosh() - 1.0) + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp()),
        0.0,
        upper,
        Tolerance::new(0.0, 1e-12),
    );
    let v = match r {
        Ok(i) => i.value,
        Err(crate::Error::Quadrature { value, .. }) => value,
        Err(_) => f64::NAN,
    };
    v * (-z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_matches_closed_forms_on_both_sides_of_switch() {
        for &s in &[1e-4, 0.3, 2.0, 7.9, 8.1, 15.0, 40.0] {
            let d1 = 1.0 - s.cos();
            assert!(
                (one_minus_radial_kernel(1, s) - d1).abs() < 1e-13 * (1.0 + d1),
                "d=1 s={s}"
            );
            let d3 = 1.0 - s.sin() / s;
            assert!(
                (one_minus_radial_kernel(3, s) - d3).abs() < 1e-13 * (1.0 + d3),
                "d=3 s={s}"
            );
            let d2 = 1.0 - libm::j0(s);
            assert!((one_minus_radial_kernel(2, s) - d2).abs() < 1e-12, "d=2 s={s}");
            let d4 = 1.0 - 2.0 * libm::j1(s) / s;
            assert!((one_minus_radial_kernel(4, s) - d4).abs() < 1e-12, "d=4 s={s}");
            if s > 0.1 {
                // the closed form itself cancels for small s
                let d5 = 1.0 - 3.0 * (s.sin() - s * s.cos()) / (s * s * s);
                assert!((one_minus_radial_kernel(5, s) - d5).abs() < 1e-10, "d=5 s={s}");
            }
        }
    }

    #[test]
    fn small_argument_has_no_cancellation() {
        let s: f64 = 1e-6;
        let v = one_minus_radial_kernel(3, s);
        assert!((v / (s * s / 6.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bessel_k_half_integer_closed_form() {
        // K_{1/2}(z) = sqrt(π/(2z)) e^{-z};  K_{3/2}(z) = K_{1/2}(z) (1 + 1/z)
        for &z in &[0.01, 0.5, 3.0, 20.0] {
            let k12 = (core::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp();
            assert!((bessel_k(0.5, z) / k12 - 1.0).abs() < 1e-10, "z={z}");
            assert!(
                (bessel_k(1.5, z) / (k12 * (1.0 + 1.0 / z)) - 1.0).abs() < 1e-10,
                "z={z}"
            );
        }
    }
}
