//! Process specifications and the characteristic exponent.
//!
//! An isotropic unimodal Lévy process is described by its dimension, the
//! Gaussian coefficient `σ` and a radial non-increasing Lévy density `ν`.
//! Its characteristic exponent is
//! `ψ(ξ) = σ²|ξ|² + ∫ (1 − cos⟨ξ, x⟩) ν(|x|) dx`, which after averaging the
//! cosine over spheres becomes the one-dimensional integral
//! `ω_d ∫_0^∞ (1 − Λ_d(|ξ| r)) ν(r) r^{d-1} dr` (see [`crate::special`]).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::Stehfest;
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{gamma, log_grid, sphere_area, LogLogTable, PI};
use crate::quad::{integrate, integrate_pieces, wynn_epsilon, Integral, Tolerance};
use crate::special::{bessel_k, one_minus_radial_kernel, radial_kernel, radial_kernel_envelope};

/// Catalogue of process families. Stability indices are in `(0, 2)` unless
/// stated otherwise; jump densities of the form `f(r) r^{-d}` use the
/// isotropic α-stable normalization so that `ψ(u) ≈ u^α` at high frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilySpec {
    /// `ψ(u) = σ²u²`, `σ` defaults to 1.
    Brownian,
    /// `ψ(u) = u^α`, `α ∈ (0, 2]`.
    IsotropicStable { alpha: f64 },
    /// `ψ(u) = σ²u² + u^α`; needs `sigma > 0`.
    StableBrownian { alpha: f64 },
    /// `ψ(u) = (u² + m)^{α/2} − m^{α/2}`, `m ≥ 0`.
    RelativisticStable { alpha: f64, m: f64 },
    /// `ν(r) = c r^{-d-α} e^{-r}`.
    TemperedStable { alpha: f64 },
    /// `ν(r) = c r^{-d-α} 1{r < radius}`.
    TruncatedStable {
        alpha: f64,
        #[serde(default = "default_radius")]
        radius: f64,
    },
    /// `ν(r) = c r^{-d-α}` for `r < 1` and `c r^{-d-alpha_far}` for `r ≥ 1`.
    LayeredStable { alpha: f64, alpha_far: f64 },
    /// `ψ(u) = log(1 + u^α)`, `α ∈ (0, 2]`.
    GeometricStable { alpha: f64 },
    /// `ψ(u) = log(1 + u²)`.
    VarianceGamma,
    /// `ψ(u) = [u^{a2} + (u²+m)^{a3/2} − m^{a3/2}]^{1−a1/2} log^{a1/2}(1 + u^{a4})`
    /// with all indices in `[0, 2]`, `a1+a2+a3 > 0`, `a2+a3+a4 > 0`, `m ≥ 0`.
    /// A zero `a2` drops the `u^{a2}` term.
    Composite {
        a1: f64,
        a2: f64,
        a3: f64,
        a4: f64,
        #[serde(default)]
        m: f64,
    },
}

fn default_radius() -> f64 {
    1.0
}

impl FamilySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            FamilySpec::Brownian => "brownian",
            FamilySpec::IsotropicStable { .. } => "isotropic-stable",
            FamilySpec::StableBrownian { .. } => "stable-brownian",
            FamilySpec::RelativisticStable { .. } => "relativistic-stable",
            FamilySpec::TemperedStable { .. } => "tempered-stable",
            FamilySpec::TruncatedStable { .. } => "truncated-stable",
            FamilySpec::LayeredStable { .. } => "layered-stable",
            FamilySpec::GeometricStable { .. } => "geometric-stable",
            FamilySpec::VarianceGamma => "variance-gamma",
            FamilySpec::Composite { .. } => "composite",
        }
    }

    /// Builds a family from its tag and named parameters.
    pub fn from_tag(tag: &str, params: &[(&str, f64)]) -> Result<Self> {
        let get = |name: &'static str| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::param(name, "missing"))
        };
        let get_or = |name: &'static str, default: f64| get(name).unwrap_or(default);
        Ok(match tag {
            "brownian" => FamilySpec::Brownian,
            "isotropic-stable" | "stable" => FamilySpec::IsotropicStable { alpha: get("alpha")? },
            "stable-brownian" => FamilySpec::StableBrownian { alpha: get("alpha")? },
            "relativistic-stable" => FamilySpec::RelativisticStable {
                alpha: get("alpha")?,
                m: get("m")?,
            },
            "tempered-stable" => FamilySpec::TemperedStable { alpha: get("alpha")? },
            "truncated-stable" => FamilySpec::TruncatedStable {
                alpha: get("alpha")?,
                radius: get_or("radius", 1.0),
            },
            "layered-stable" => FamilySpec::LayeredStable {
                alpha: get("alpha")?,
                alpha_far: get("alpha_far")?,
            },
            "geometric-stable" => FamilySpec::GeometricStable { alpha: get("alpha")? },
            "variance-gamma" => FamilySpec::VarianceGamma,
            "composite" => FamilySpec::Composite {
                a1: get("a1")?,
                a2: get("a2")?,
                a3: get("a3")?,
                a4: get("a4")?,
                m: get_or("m", 0.0),
            },
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }
}

/// Serializable model description: dimension, optional extra Gaussian
/// coefficient and the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(flatten)]
    pub family: FamilySpec,
}

impl ModelSpec {
    pub fn new(dimension: usize, family: FamilySpec) -> Self {
        Self {
            dimension,
            sigma: None,
            family,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn build(&self) -> Result<LevyModel> {
        LevyModel::new(self.clone(), Tolerance::default())
    }
}

/// Laplace exponent of a subordinator, `φ(λ) = bλ + ∫(1 − e^{−λs}) μ(ds)`.
pub trait Bernstein: Send + Sync + fmt::Debug {
    fn phi(&self, lambda: f64) -> f64;

    /// `φ'(λ)`; the default is a fourth-order central difference.
    fn dphi(&self, lambda: f64) -> f64 {
        let h = 1e-3 * lambda;
        (-self.phi(lambda + 2.0 * h) + 8.0 * self.phi(lambda + h) - 8.0 * self.phi(lambda - h)
            + self.phi(lambda - 2.0 * h))
            / (12.0 * h)
    }

    /// Drift `b = lim φ(λ)/λ`.
    fn drift(&self) -> f64 {
        0.0
    }

    /// Exact Lévy density `μ(s)` when known.
    fn levy_density(&self, _s: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
struct GeometricStableBf {
    beta: f64,
}

impl Bernstein for GeometricStableBf {
    fn phi(&self, l: f64) -> f64 {
        l.powf(self.beta).ln_1p()
    }
    fn dphi(&self, l: f64) -> f64 {
        let p = l.powf(self.beta);
        self.beta * p / (l * (1.0 + p))
    }
    fn drift(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy)]
struct GammaBf;

impl Bernstein for GammaBf {
    fn phi(&self, l: f64) -> f64 {
        l.ln_1p()
    }
    fn dphi(&self, l: f64) -> f64 {
        1.0 / (1.0 + l)
    }
    fn levy_density(&self, s: f64) -> Option<f64> {
        Some((-s).exp() / s)
    }
}

#[derive(Debug, Clone, Copy)]
struct CompositeBf {
    a1: f64,
    a2: f64,
    a3: f64,
    a4: f64,
    m: f64,
}

impl CompositeBf {
    fn base(&self, l: f64) -> (f64, f64) {
        let mut b = 0.0;
        let mut db = 0.0;
        if self.a2 > 0.0 {
            b += l.powf(self.a2 / 2.0);
            db += self.a2 / 2.0 * l.powf(self.a2 / 2.0 - 1.0);
        }
        if self.a3 > 0.0 {
            b += (l + self.m).powf(self.a3 / 2.0) - self.m.powf(self.a3 / 2.0);
            db += self.a3 / 2.0 * (l + self.m).powf(self.a3 / 2.0 - 1.0);
        }
        (b, db)
    }

    fn log_part(&self, l: f64) -> (f64, f64) {
        let p = l.powf(self.a4 / 2.0);
        let lg = p.ln_1p();
        let dlg = if self.a4 > 0.0 {
            self.a4 / 2.0 * p / (l * (1.0 + p))
        } else {
            0.0
        };
        (lg, dlg)
    }
}

impl Bernstein for CompositeBf {
    fn phi(&self, l: f64) -> f64 {
        let p = 1.0 - self.a1 / 2.0;
        let q = self.a1 / 2.0;
        let (b, _) = self.base(l);
        let (lg, _) = self.log_part(l);
        let left = if p > 0.0 { b.powf(p) } else { 1.0 };
        let right = if q > 0.0 { lg.powf(q) } else { 1.0 };
        left * right
    }

    fn dphi(&self, l: f64) -> f64 {
        let p = 1.0 - self.a1 / 2.0;
        let q = self.a1 / 2.0;
        let (b, db) = self.base(l);
        let (lg, dlg) = self.log_part(l);
        let left = if p > 0.0 { b.powf(p) } else { 1.0 };
        let right = if q > 0.0 { lg.powf(q) } else { 1.0 };
        let mut out = 0.0;
        if p > 0.0 {
            out += p * b.powf(p - 1.0) * db * right;
        }
        if q > 0.0 {
            out += left * q * lg.powf(q - 1.0) * dlg;
        }
        out
    }

    fn drift(&self) -> f64 {
        if self.a1 > 0.0 {
            return 0.0;
        }
        let mut b = 0.0;
        if self.a2 == 2.0 {
            b += 1.0;
        }
        if self.a3 == 2.0 {
            b += 1.0;
        }
        b
    }
}

/// Subordinator Lévy density `μ(s)`, exact or recovered from `φ'` by
/// Gaver–Stehfest inversion of `s μ(s) ↔ φ'(λ) − b` and tabulated.
#[derive(Clone, Debug)]
struct SubordinatorDensity {
    bernstein: Arc<dyn Bernstein>,
    table: Option<(LogLogTable, f64)>,
}

impl SubordinatorDensity {
    fn new(bernstein: Arc<dyn Bernstein>) -> Result<Self> {
        if bernstein.levy_density(1.0).is_some() {
            return Ok(Self { bernstein, table: None });
        }
        let gs = Stehfest::new(14);
        let b = bernstein.drift();
        let grid = log_grid(1e-12, 1e12, 16);
        let raw: Vec<f64> = grid
            .iter()
            .map(|&s| gs.invert(|l| bernstein.dphi(l) - b, s) / s)
            .collect();
        // inversion noise dominates once s μ(s) is ~1e-8 below its peak
        let peak = grid.iter().zip(&raw).map(|(s, m)| s * m).fold(0.0_f64, |a, v| a.max(v));
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (s, m) in grid.iter().zip(&raw) {
            if *m > 0.0 && s * m > 1e-8 * peak {
                xs.push(*s);
                ys.push(*m);
            } else if !xs.is_empty() {
                break;
            }
        }
        if xs.len() < 4 {
            return Err(Error::InvalidDensity("subordinator density could not be recovered"));
        }
        let cutoff = *xs.last().unwrap();
        let table = LogLogTable::new(&xs, &ys).ok_or(Error::InvalidDensity("subordinator density table"))?;
        Ok(Self {
            bernstein,
            table: Some((table, cutoff)),
        })
    }

    fn eval(&self, s: f64) -> f64 {
        match &self.table {
            None => self.bernstein.levy_density(s).unwrap_or(0.0),
            Some((t, cutoff)) => {
                if s > *cutoff {
                    0.0
                } else {
                    t.eval(s)
                }
            }
        }
    }

    /// `ν(r) = ∫ (4πs)^{-d/2} e^{-r²/(4s)} μ(s) ds`.
    fn jump_density(&self, d: usize, r: f64) -> f64 {
        let df = d as f64;
        let r2 = r * r;
        let integrand = |t: f64| {
            let v = t.exp();
            ((1.0 - df / 2.0) * t - 0.25 / v).exp() * self.eval(r2 * v)
        };
        let tol = Tolerance::new(0.0, 1e-9);
        let v = match integrate(integrand, -8.0, 70.0, tol) {
            Ok(i) => i.value,
            Err(Error::Quadrature { value, .. }) => value,
            Err(_) => 0.0,
        };
        (4.0 * PI).powf(-df / 2.0) * r.powf(2.0 - df) * v
    }
}

/// Radial Lévy density `r ↦ ν(r)` (intensity per unit volume).
#[derive(Clone, Debug)]
pub enum RadialDensity {
    /// No jumps.
    Zero,
    /// `c r^{-p}` on `(0, ∞)`.
    Power { c: f64, p: f64 },
    /// `c r^{-p} e^{-r}`.
    Tempered { c: f64, p: f64 },
    /// `c r^{-p}` on `(0, radius)`.
    Truncated { c: f64, p: f64, radius: f64 },
    /// `c r^{-p}` on `(0, 1)`, `c r^{-p_far}` beyond.
    Layered { c: f64, p: f64, p_far: f64 },
    /// `c K_ν(μr) r^{-ν}` (relativistic stable).
    BesselK { c: f64, order: f64, mu: f64 },
    /// Tabulated in log-log coordinates with power-law extrapolation.
    Table(Arc<LogLogTable>),
    /// Sum of densities.
    Sum(Arc<[RadialDensity]>),
}

impl RadialDensity {
    pub fn eval(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        match self {
            RadialDensity::Zero => 0.0,
            RadialDensity::Power { c, p } => c * r.powf(-p),
            RadialDensity::Tempered { c, p } => c * r.powf(-p) * (-r).exp(),
            RadialDensity::Truncated { c, p, radius } => {
                if r < *radius {
                    c * r.powf(-p)
                } else {
                    0.0
                }
            }
            RadialDensity::Layered { c, p, p_far } => {
                if r < 1.0 {
                    c * r.powf(-p)
                } else {
                    c * r.powf(-p_far)
                }
            }
            RadialDensity::BesselK { c, order, mu } => {
                let z = mu * r;
                if z > 700.0 {
                    0.0
                } else {
                    c * bessel_k(*order, z) * r.powf(-order)
                }
            }
            RadialDensity::Table(t) => t.eval(r),
            RadialDensity::Sum(parts) => parts.iter().map(|p| p.eval(r)).sum(),
        }
    }

    /// Upper bound of the support (`∞` unless truncated).
    pub fn support(&self) -> f64 {
        match self {
            RadialDensity::Zero => 0.0,
            RadialDensity::Truncated { radius, .. } => *radius,
            RadialDensity::Sum(parts) => parts.iter().map(|p| p.support()).fold(0.0, f64::max),
            _ => f64::INFINITY,
        }
    }

    /// Radii where `ν` has a kink or jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialDensity::Truncated { radius, .. } => alloc::vec![*radius],
            RadialDensity::Layered { .. } => alloc::vec![1.0],
            _ => Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, RadialDensity::Zero)
    }
}

/// Which description the model came from.
#[derive(Clone, Debug)]
pub enum Family {
    Catalogue(FamilySpec),
    /// Subordinate Brownian motion `ψ(ξ) = φ(|ξ|²)` for a user-supplied
    /// Bernstein function.
    Subordinate(Arc<dyn Bernstein>),
}

/// A validated isotropic unimodal Lévy process.
#[derive(Clone, Debug)]
pub struct LevyModel {
    dimension: usize,
    /// Extra Gaussian coefficient added on top of the family's exponent.
    sigma_extra: f64,
    /// Total Gaussian coefficient (extra plus any subordinator drift).
    sigma: f64,
    family: Family,
    spec: Option<ModelSpec>,
    nu: RadialDensity,
    closed: Option<ClosedPsi>,
    psi_table: Option<Arc<LogLogTable>>,
    psi_monotone: bool,
    levy_integral: f64,
    tol: Tolerance,
}

#[derive(Clone, Debug)]
enum ClosedPsi {
    Power(f64),
    Relativistic { alpha: f64, m: f64 },
    Bernstein(Arc<dyn Bernstein>),
}

impl ClosedPsi {
    fn eval(&self, u: f64) -> f64 {
        match self {
            ClosedPsi::Power(a) => u.powf(*a),
            ClosedPsi::Relativistic { alpha, m } => {
                if u * u < 1e-8 * m {
                    // (m + u²)^{a/2} − m^{a/2} without cancellation
                    let h = alpha / 2.0;
                    let x = u * u / m;
                    m.powf(h) * (h * x + h * (h - 1.0) / 2.0 * x * x)
                } else {
                    (u * u + m).powf(alpha / 2.0) - m.powf(alpha / 2.0)
                }
            }
            ClosedPsi::Bernstein(b) => b.phi(u * u) - b.drift() * u * u,
        }
    }
}

/// `α 2^{α−1} Γ((d+α)/2) / (π^{d/2} Γ(1 − α/2))`, the constant making
/// `c |x|^{-d-α}` the Lévy density of `ψ(ξ) = |ξ|^α`.
pub fn stable_density_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma((df + alpha) / 2.0) / (PI.powf(df / 2.0) * gamma(1.0 - alpha / 2.0))
}

fn check_index(name: &'static str, v: f64, lo_open: f64, hi: f64, hi_closed: bool) -> Result<()> {
    let ok = v > lo_open && if hi_closed { v <= hi } else { v < hi };
    if !ok || !v.is_finite() {
        return Err(Error::param(
            name,
            format!("{v} not in ({lo_open}, {hi}{}", if hi_closed { "]" } else { ")" }),
        ));
    }
    Ok(())
}

const PSI_TABLE_RANGE: (f64, f64) = (1e-8, 1e8);
const PSI_TABLE_DENSITY: usize = 16;

impl LevyModel {
    /// Validates `spec` and attaches the exponent and Lévy density.
    pub fn new(spec: ModelSpec, tol: Tolerance) -> Result<Self> {
        let d = spec.dimension;
        if d == 0 {
            return Err(Error::param("dimension", "must be a positive integer"));
        }
        let mut sigma_extra = spec.sigma.unwrap_or(0.0);
        if !(sigma_extra >= 0.0) || !sigma_extra.is_finite() {
            return Err(Error::param("sigma", "must be finite and nonnegative"));
        }
        let mut closed = None;
        let mut psi_monotone = true;
        let mut drift = 0.0;
        let nu = match spec.family {
            FamilySpec::Brownian => {
                if spec.sigma.is_none() {
                    sigma_extra = 1.0;
                }
                if sigma_extra == 0.0 {
                    return Err(Error::BoundedExponent);
                }
                RadialDensity::Zero
            }
            FamilySpec::IsotropicStable { alpha } => {
                check_index("alpha", alpha, 0.0, 2.0, true)?;
                if alpha == 2.0 {
                    drift = 1.0;
                    RadialDensity::Zero
                } else {
                    closed = Some(ClosedPsi::Power(alpha));
                    RadialDensity::Power {
                        c: stable_density_constant(d, alpha),
                        p: d as f64 + alpha,
                    }
                }
            }
            FamilySpec::StableBrownian { alpha } => {
                check_index("alpha", alpha, 0.0, 2.0, false)?;
                if sigma_extra <= 0.0 {
                    return Err(Error::param("sigma", "stable-brownian needs sigma > 0"));
                }
                closed = Some(ClosedPsi::Power(alpha));
                RadialDensity::Power {
                    c: stable_density_constant(d, alpha),
                    p: d as f64 + alpha,
                }
            }
            FamilySpec::RelativisticStable { alpha, m } => {
                check_index("alpha", alpha, 0.0, 2.0, false)?;
                if !(m >= 0.0) || !m.is_finite() {
                    return Err(Error::param("m", "must be nonnegative"));
                }
                let df = d as f64;
                if m == 0.0 {
                    closed = Some(ClosedPsi::Power(alpha));
                    RadialDensity::Power {
                        c: stable_density_constant(d, alpha),
                        p: df + alpha,
                    }
                } else {
                    closed = Some(ClosedPsi::Relativistic { alpha, m });
                    relativistic_density(d, alpha, m)
                }
            }
            FamilySpec::TemperedStable { alpha } => {
                check_index("alpha", alpha, 0.0, 2.0, false)?;
                psi_monotone = false;
                RadialDensity::Tempered {
                    c: stable_density_constant(d, alpha),
                    p: d as f64 + alpha,
                }
            }
            FamilySpec::TruncatedStable { alpha, radius } => {
                check_index("alpha", alpha, 0.0, 2.0, false)?;
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::param("radius", "truncation radius must be positive"));
                }
                psi_monotone = false;
                RadialDensity::Truncated {
                    c: stable_density_constant(d, alpha),
                    p: d as f64 + alpha,
                    radius,
                }
            }
            FamilySpec::LayeredStable { alpha, alpha_far } => {
                check_index("alpha", alpha, 0.0, 2.0, false)?;
                check_index("alpha_far", alpha_far, 0.0, 2.0, false)?;
                psi_monotone = false;
                RadialDensity::Layered {
                    c: stable_density_constant(d, alpha),
                    p: d as f64 + alpha,
                    p_far: d as f64 + alpha_far,
                }
            }
            FamilySpec::GeometricStable { alpha } => {
                check_index("alpha", alpha, 0.0, 2.0, true)?;
                let bf: Arc<dyn Bernstein> = Arc::new(GeometricStableBf { beta: alpha / 2.0 });
                closed = Some(ClosedPsi::Bernstein(bf.clone()));
                subordinated_density(d, bf)?
            }
            FamilySpec::VarianceGamma => {
                let bf: Arc<dyn Bernstein> = Arc::new(GammaBf);
                closed = Some(ClosedPsi::Bernstein(bf.clone()));
                subordinated_density(d, bf)?
            }
            FamilySpec::Composite { a1, a2, a3, a4, m } => {
                for (name, v) in [("a1", a1), ("a2", a2), ("a3", a3), ("a4", a4)] {
                    if !(0.0..=2.0).contains(&v) {
                        return Err(Error::param(name, format!("{v} not in [0, 2]")));
                    }
                }
                if !(a1 + a2 + a3 > 0.0) {
                    return Err(Error::param("a1", "a1 + a2 + a3 must be positive"));
                }
                if !(a2 + a3 + a4 > 0.0) {
                    return Err(Error::param("a2", "a2 + a3 + a4 must be positive"));
                }
                if !(m >= 0.0) || !m.is_finite() {
                    return Err(Error::param("m", "must be nonnegative"));
                }
                let unbounded = (a1 < 2.0 && (a2 > 0.0 || a3 > 0.0)) || (a1 > 0.0 && a4 > 0.0);
                if !unbounded {
                    return Err(Error::BoundedExponent);
                }
                let bf = CompositeBf { a1, a2, a3, a4, m };
                drift = bf.drift();
                let bf: Arc<dyn Bernstein> = Arc::new(bf);
                closed = Some(ClosedPsi::Bernstein(bf.clone()));
                // pure drift: no jump part left to recover
                let pure_drift = a1 == 0.0 && (a2 == 0.0 || a2 == 2.0) && (a3 == 0.0 || a3 == 2.0);
                if pure_drift {
                    closed = None;
                    RadialDensity::Zero
                } else if a1 == 0.0 {
                    // u^{a2} + relativistic part: the densities add
                    let mut parts = Vec::new();
                    if a2 > 0.0 && a2 < 2.0 {
                        parts.push(RadialDensity::Power {
                            c: stable_density_constant(d, a2),
                            p: d as f64 + a2,
                        });
                    }
                    if a3 > 0.0 && a3 < 2.0 {
                        parts.push(if m == 0.0 {
                            RadialDensity::Power {
                                c: stable_density_constant(d, a3),
                                p: d as f64 + a3,
                            }
                        } else {
                            relativistic_density(d, a3, m)
                        });
                    }
                    if parts.len() == 1 {
                        parts.pop().unwrap()
                    } else {
                        RadialDensity::Sum(parts.into())
                    }
                } else {
                    subordinated_density(d, bf)?
                }
            }
        };
        let sigma = (sigma_extra * sigma_extra + drift).sqrt();
        let family = Family::Catalogue(spec.family.clone());
        Self::assemble(d, sigma_extra, sigma, family, Some(spec), nu, closed, psi_monotone, tol)
    }

    /// Subordinate Brownian motion with `ψ(ξ) = σ²|ξ|² + φ(|ξ|²)`.
    pub fn subordinate_brownian(
        dimension: usize,
        sigma: f64,
        bernstein: Arc<dyn Bernstein>,
        tol: Tolerance,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be a positive integer"));
        }
        if !(sigma >= 0.0) {
            return Err(Error::param("sigma", "must be nonnegative"));
        }
        let grow = bernstein.phi(1e16) - bernstein.phi(1e8);
        if !(grow > 1e-9 * bernstein.phi(1e8).abs()) && sigma == 0.0 && bernstein.drift() == 0.0 {
            return Err(Error::BoundedExponent);
        }
        let total_sigma = (sigma * sigma + bernstein.drift()).sqrt();
        let nu = subordinated_density(dimension, bernstein.clone())?;
        let closed = Some(ClosedPsi::Bernstein(bernstein.clone()));
        Self::assemble(
            dimension,
            sigma,
            total_sigma,
            Family::Subordinate(bernstein),
            None,
            nu,
            closed,
            true,
            tol,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dimension: usize,
        sigma_extra: f64,
        sigma: f64,
        family: Family,
        spec: Option<ModelSpec>,
        nu: RadialDensity,
        closed: Option<ClosedPsi>,
        psi_monotone: bool,
        tol: Tolerance,
    ) -> Result<Self> {
        let mut model = Self {
            dimension,
            sigma_extra,
            sigma,
            family,
            spec,
            nu,
            closed,
            psi_table: None,
            psi_monotone,
            levy_integral: 0.0,
            tol,
        };
        model.check_density()?;
        if model.closed.is_none() && !model.nu.is_zero() {
            model.build_psi_table()?;
        }
        Ok(model)
    }

    fn check_density(&mut self) -> Result<()> {
        if self.nu.is_zero() {
            if self.sigma == 0.0 {
                return Err(Error::BoundedExponent);
            }
            return Ok(());
        }
        let grid = log_grid(1e-6, 1e6, 8);
        let mut prev = f64::INFINITY;
        for &r in &grid {
            let v = self.nu.eval(r);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidDensity("nonnegativity"));
            }
            if v > prev * (1.0 + 1e-9) {
                return Err(Error::InvalidDensity("unimodality (density must be non-increasing)"));
            }
            prev = v;
        }
        let w = sphere_area(self.dimension);
        let d = self.dimension as f64;
        let nu = &self.nu;
        let tol = Tolerance::new(0.0, 1e-8);
        let near = integrate_pieces(
            |r| r.powf(d + 1.0) * nu.eval(r),
            0.0,
            1.0f64.min(nu.support()),
            &nu.breakpoints(),
            tol,
        )?;
        let far = integrate_pieces(
            |r| r.powf(d - 1.0) * nu.eval(r),
            1.0,
            nu.support(),
            &nu.breakpoints(),
            tol,
        )?;
        self.levy_integral = w * (near.value + far.value);
        if !self.levy_integral.is_finite() {
            return Err(Error::InvalidDensity("Lévy integrability ∫(r²∧1)ν < ∞"));
        }
        if self.sigma == 0.0 {
            // unbounded ψ requires infinite mass near the origin
            let m1 = w * integrate_pieces(
                |r| r.powf(d - 1.0) * nu.eval(r),
                1e-6,
                1.0f64.min(nu.support()),
                &nu.breakpoints(),
                tol,
            )?
            .value;
            let m2 = w * integrate_pieces(
                |r| r.powf(d - 1.0) * nu.eval(r),
                1e-12,
                1.0f64.min(nu.support()),
                &nu.breakpoints(),
                tol,
            )?
            .value;
            if !(m2 > m1 * 1.5) {
                return Err(Error::BoundedExponent);
            }
        }
        Ok(())
    }

    fn build_psi_table(&mut self) -> Result<()> {
        let grid = log_grid(PSI_TABLE_RANGE.0, PSI_TABLE_RANGE.1, PSI_TABLE_DENSITY);
        let values: Vec<f64> = grid
            .iter()
            .map(|&u| self.psi_jump_quadrature(u).map(|i| i.value))
            .collect::<Result<_>>()?;
        let table = LogLogTable::new(&grid, &values).ok_or(Error::InvalidDensity("ψ table"))?;
        self.psi_monotone = values.windows(2).all(|w| w[1] >= w[0]);
        self.psi_table = Some(Arc::new(table));
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Gaussian coefficient `σ` of the exponent (`σ²|ξ|²` term).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn nu(&self) -> &RadialDensity {
        &self.nu
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn with_tolerance(mut self, tol: Tolerance) -> Self {
        self.tol = tol;
        self
    }

    pub fn name(&self) -> String {
        match &self.family {
            Family::Catalogue(f) => String::from(f.tag()),
            Family::Subordinate(_) => String::from("subordinate-brownian"),
        }
    }

    pub fn has_closed_psi(&self) -> bool {
        self.closed.is_some() || self.nu.is_zero()
    }

    /// Whether `ψ` is known to be non-decreasing (so `ψ* = ψ`).
    pub fn psi_is_monotone(&self) -> bool {
        self.psi_monotone
    }

    /// `ω_d ∫ (r² ∧ 1) ν(r) r^{d-1} dr`.
    pub fn levy_integral(&self) -> f64 {
        self.levy_integral
    }

    /// Stability index for the families that are exactly stable.
    pub fn stable_index(&self) -> Option<f64> {
        match &self.family {
            Family::Catalogue(FamilySpec::Brownian) => Some(2.0),
            Family::Catalogue(FamilySpec::IsotropicStable { alpha }) if self.sigma_extra == 0.0 => Some(*alpha),
            Family::Catalogue(FamilySpec::RelativisticStable { alpha, m }) if *m == 0.0 && self.sigma_extra == 0.0 => {
                Some(*alpha)
            }
            _ => None,
        }
    }

    /// `ψ(u)`: closed form when available, otherwise radial quadrature.
    pub fn psi(&self, u: f64) -> Result<f64> {
        let u = u.abs();
        if u == 0.0 {
            return Ok(0.0);
        }
        let gauss = self.sigma * self.sigma * u * u;
        if self.nu.is_zero() {
            return Ok(gauss);
        }
        match &self.closed {
            Some(c) => Ok(self.sigma_extra * self.sigma_extra * u * u + c.eval(u)),
            None => Ok(gauss + self.psi_jump_quadrature(u)?.value),
        }
    }

    /// `ψ(u)` from the closed form or the precomputed table. Used in inner
    /// loops (κ, step control) where a quadrature per call is too slow.
    pub fn psi_fast(&self, u: f64) -> f64 {
        let u = u.abs();
        if u == 0.0 {
            return 0.0;
        }
        if self.nu.is_zero() {
            return self.sigma * self.sigma * u * u;
        }
        match (&self.closed, &self.psi_table) {
            (Some(c), _) => self.sigma_extra * self.sigma_extra * u * u + c.eval(u),
            (None, Some(t)) => self.sigma * self.sigma * u * u + t.eval(u),
            (None, None) => self.psi(u).unwrap_or(f64::NAN),
        }
    }

    /// Jump part of `ψ` by quadrature of the radial reduction, whatever the
    /// family (used to cross-check closed forms).
    pub fn psi_jump_quadrature(&self, u: f64) -> Result<Integral> {
        let d = self.dimension;
        let df = d as f64;
        let w = sphere_area(d);
        let nu = &self.nu;
        if nu.is_zero() || u == 0.0 {
            return Ok(Integral::ZERO);
        }
        let support = nu.support();
        let breaks = nu.breakpoints();
        let g = |r: f64| nu.eval(r) * r.powf(df - 1.0);
        let rel = self.tol.rel.min(1e-8);
        let tol = Tolerance::new(0.0, rel);
        let a = (8.0 * PI / u).min(support);
        let near = integrate_pieces(|r| one_minus_radial_kernel(d, u * r) * g(r), 0.0, a, &breaks, tol)?;
        if a >= support {
            return Ok(near.scaled(w));
        }
        let abs = rel * near.value.abs() * 1e-2;
        let tol_tail = Tolerance::new(abs, rel);
        let mass = integrate_pieces(g, a, support, &breaks, tol_tail)?;
        let osc = self.oscillatory_tail(u, a, support, &breaks, abs.max(1e-300))?;
        Ok((near
            + mass
            + Integral {
                value: -osc.value,
                error: osc.error,
            })
        .scaled(w))
    }

    /// `∫_a^support Λ_d(u r) ν(r) r^{d-1} dr` by half-period summation with
    /// epsilon acceleration.
    fn oscillatory_tail(&self, u: f64, a: f64, support: f64, breaks: &[f64], abs: f64) -> Result<Integral> {
        let d = self.dimension;
        let df = d as f64;
        let nu = &self.nu;
        let f = |r: f64| radial_kernel(d, u * r) * nu.eval(r) * r.powf(df - 1.0);
        let half = PI / u;
        let tol = Tolerance::new(abs * 1e-2, 1e-10);
        let mut partial: Vec<f64> = Vec::new();
        let mut sum = Integral::ZERO;
        let mut lo = a;
        const MAX_HALF_PERIODS: usize = 4000;
        for k in 0..MAX_HALF_PERIODS {
            let hi = (lo + half).min(support);
            let mut piece = Integral::ZERO;
            let mut cut = lo;
            for &b in breaks.iter().filter(|b| **b > lo && **b < hi) {
                piece = piece + integrate(&f, cut, b, tol)?;
                cut = b;
            }
            piece = piece + integrate(&f, cut, hi, tol)?;
            sum = sum + piece;
            partial.push(sum.value);
            if hi >= support {
                return Ok(sum);
            }
            lo = hi;
            // second-mean-value bound on what is left
            let remaining = 2.0 * nu.eval(lo) * lo.powf(df - 1.0) * radial_kernel_envelope(d, u * lo) / u;
            if remaining < abs {
                return Ok(Integral {
                    value: sum.value,
                    error: sum.error + remaining,
                });
            }
            if k >= 12 && k % 4 == 0 {
                let (v, e) = wynn_epsilon(&partial[partial.len().saturating_sub(24)..]);
                if e < abs {
                    return Ok(Integral {
                        value: v,
                        error: sum.error + e,
                    });
                }
            }
        }
        let (v, e) = wynn_epsilon(&partial[partial.len().saturating_sub(24)..]);
        if e < abs * 1e3 {
            return Ok(Integral { value: v, error: e });
        }
        Err(Error::Quadrature { value: v, error: e })
    }

    /// `ψ*(u) = sup_{0 ≤ s ≤ u} ψ(s)`.
    pub fn psi_star(&self, u: f64) -> f64 {
        let u = u.abs();
        // the table only locates the supremum; the endpoint value is exact
        let at = match (&self.closed, &self.psi_table) {
            (None, Some(_)) => self.psi(u).unwrap_or_else(|_| self.psi_fast(u)),
            _ => self.psi_fast(u),
        };
        if self.psi_monotone || u == 0.0 {
            return at;
        }
        // refinement grid over six decades below u, then local golden search
        let grid = log_grid(u * 1e-6, u, 32);
        let (mut best_s, mut best) = (u, at);
        for &s in &grid {
            let v = self.psi_fast(s);
            if v > best {
                best = v;
                best_s = s;
            }
        }
        if best_s < u {
            let (mut lo, mut hi) = (best_s / 1.08, (best_s * 1.08).min(u));
            let g = 0.618_033_988_749_895;
            for _ in 0..40 {
                let x1 = hi - g * (hi - lo);
                let x2 = lo + g * (hi - lo);
                if self.psi_fast(x1) > self.psi_fast(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            best = best.max(self.psi_fast(0.5 * (lo + hi)));
        }
        best
    }
}

fn relativistic_density(d: usize, alpha: f64, m: f64) -> RadialDensity {
    let df = d as f64;
    let mu = m.sqrt();
    let order = (df + alpha) / 2.0;
    let c = alpha * 2f64.powf((alpha - df) / 2.0) * mu.powf(order) / (PI.powf(df / 2.0) * gamma(1.0 - alpha / 2.0));
    RadialDensity::BesselK { c, order, mu }
}

fn subordinated_density(d: usize, bf: Arc<dyn Bernstein>) -> Result<RadialDensity> {
    let sub = SubordinatorDensity::new(bf)?;
    let grid = log_grid(1e-6, 1e6, 12);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut prev = f64::INFINITY;
    for &r in &grid {
        let v = sub.jump_density(d, r);
        if !(v > 0.0) || !v.is_finite() {
            break;
        }
        // the quadrature can wobble in the far tail; keep the table monotone
        let v = v.min(prev);
        xs.push(r);
        ys.push(v);
        prev = v;
    }
    if xs.len() < 8 {
        return Err(Error::InvalidDensity("could not tabulate subordinate Lévy density"));
    }
    let t = LogLogTable::new(&xs, &ys).ok_or(Error::InvalidDensity("subordinate density table"))?;
    Ok(RadialDensity::Table(Arc::new(t)))
}

/// Builds a model from a family tag and named parameters, e.g.
/// `make_model("isotropic-stable", 1, &[("alpha", 1.0)])`. A `sigma` entry
/// sets the extra Gaussian coefficient.
pub fn make_model(tag: &str, dimension: usize, params: &[(&str, f64)]) -> Result<LevyModel> {
    let family = FamilySpec::from_tag(tag, params)?;
    let sigma = params.iter().find(|(k, _)| *k == "sigma").map(|(_, v)| *v);
    ModelSpec {
        dimension,
        sigma,
        family,
    }
    .build()
}

/// One representative of every catalogue family in dimension `d`.
pub fn catalogue(d: usize) -> Vec<ModelSpec> {
    use FamilySpec::*;
    [
        (None, Brownian),
        (None, IsotropicStable { alpha: 1.0 }),
        (Some(0.5), StableBrownian { alpha: 1.2 }),
        (None, RelativisticStable { alpha: 1.0, m: 1.0 }),
        (None, TemperedStable { alpha: 1.0 }),
        (
            None,
            TruncatedStable {
                alpha: 1.0,
                radius: 1.0,
            },
        ),
        (
            None,
            LayeredStable {
                alpha: 1.5,
                alpha_far: 0.5,
            },
        ),
        (None, GeometricStable { alpha: 1.5 }),
        (None, VarianceGamma),
        (
            None,
            Composite {
                a1: 0.0,
                a2: 0.5,
                a3: 1.5,
                a4: 0.0,
                m: 1.0,
            },
        ),
    ]
    .into_iter()
    .map(|(sigma, family)| ModelSpec {
        dimension: d,
        sigma,
        family,
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stable(d: usize, alpha: f64) -> LevyModel {
        make_model("isotropic-stable", d, &[("alpha", alpha)]).unwrap()
    }

    #[test]
    fn brownian_exponent() {
        let m = make_model("brownian", 1, &[("sigma", 1.0)]).unwrap();
        assert_eq!(m.psi(2.0).unwrap(), 4.0);
        assert!(m.nu().is_zero());
        assert_eq!(m.psi_star(3.0), 9.0);
        assert_eq!(m.psi(0.0).unwrap(), 0.0);
    }

    #[test]
    fn stable_exponent_closed_and_quadrature() {
        let m = stable(1, 1.0);
        assert!((m.psi(2.0).unwrap() - 2.0).abs() < 1e-15);
        let m = stable(1, 0.5);
        assert!((m.psi_star(16.0) - 4.0).abs() < 1e-12);
        for (d, alpha) in [(1, 1.0), (1, 0.5), (2, 1.5), (3, 1.0), (3, 0.3)] {
            let m = stable(d, alpha);
            for &u in &[1e-3, 0.37, 1.0, 12.0, 1e3] {
                let q = m.psi_jump_quadrature(u).unwrap().value;
                let want = u.powf(alpha);
                assert!((q / want - 1.0).abs() < 1e-6, "d={d} α={alpha} u={u}: {q} vs {want}");
            }
        }
    }

    #[test]
    fn relativistic_quadrature_reproduces_closed_form() {
        let m = make_model("relativistic-stable", 3, &[("alpha", 1.0), ("m", 1.0)]).unwrap();
        assert!((m.psi(1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-14);
        let q = m.psi_jump_quadrature(1.0).unwrap().value;
        assert!((q - (2f64.sqrt() - 1.0)).abs() < 1e-6, "{q}");
    }

    #[test]
    fn variance_gamma_density_in_one_dimension() {
        // ψ = log(1+u²) in d=1 has Lévy density e^{-r}/r
        let m = make_model("variance-gamma", 1, &[]).unwrap();
        for &r in &[0.01, 0.3, 1.0, 4.0] {
            let want = (-r).exp() / r;
            let got = m.nu().eval(r);
            assert!((got / want - 1.0).abs() < 1e-3, "r={r}: {got} vs {want}");
        }
    }

    #[test]
    fn composite_reduces_to_relativistic() {
        let m = make_model(
            "composite",
            3,
            &[("a1", 0.0), ("a2", 0.0), ("a3", 1.0), ("a4", 0.0), ("m", 1.0)],
        )
        .unwrap();
        assert!((m.psi(1.0).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-14);
        let q = m.psi_jump_quadrature(1.0).unwrap().value;
        assert!((q / (2f64.sqrt() - 1.0) - 1.0).abs() < 1e-6, "{q}");
        let m = make_model(
            "composite",
            2,
            &[("a1", 0.0), ("a2", 0.5), ("a3", 1.0), ("a4", 0.0), ("m", 2.0)],
        )
        .unwrap();
        for &u in &[0.1, 1.0, 10.0] {
            let q = m.psi_jump_quadrature(u).unwrap().value;
            let want = m.psi(u).unwrap();
            assert!((q / want - 1.0).abs() < 1e-6, "u={u} {q} vs {want}");
        }
    }

    #[test]
    fn inverted_subordinator_density_reproduces_exponent() {
        // heavy-tailed subordinator recovered by Laplace inversion
        let m = make_model("composite", 3, &[("a1", 1.0), ("a2", 1.0), ("a3", 0.0), ("a4", 2.0)]).unwrap();
        for &u in &[0.1, 1.0, 10.0] {
            let q = m.psi_jump_quadrature(u).unwrap().value;
            let want = m.psi(u).unwrap();
            assert!((q / want - 1.0).abs() < 1e-3, "u={u} {q} vs {want}");
        }
        let m = make_model("geometric-stable", 1, &[("alpha", 1.0)]).unwrap();
        for &u in &[0.1, 1.0, 10.0] {
            let q = m.psi_jump_quadrature(u).unwrap().value;
            let want = (1.0 + u).ln();
            assert!((q / want - 1.0).abs() < 1e-3, "u={u} {q} vs {want}");
        }
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(make_model("isotropic-stable", 1, &[("alpha", 2.5)]).is_err());
        assert!(make_model("isotropic-stable", 1, &[("alpha", 0.0)]).is_err());
        assert!(make_model("truncated-stable", 1, &[("alpha", 1.0), ("radius", -1.0)]).is_err());
        assert!(make_model("relativistic-stable", 1, &[("alpha", 1.0), ("m", -1.0)]).is_err());
        assert!(make_model("brownian", 1, &[("sigma", 0.0)]).is_err());
        assert!(matches!(make_model("nope", 1, &[]), Err(Error::UnknownFamily(_))));
        assert!(make_model("composite", 1, &[("a1", 0.0), ("a2", 0.0), ("a3", 0.0), ("a4", 1.0)]).is_err());
        assert!(ModelSpec::new(0, FamilySpec::Brownian).build().is_err());
    }

    #[derive(Debug)]
    struct Capped;
    impl Bernstein for Capped {
        fn phi(&self, l: f64) -> f64 {
            1.0 - (-l).exp()
        }
    }

    #[test]
    fn rejects_compound_poisson() {
        let r = LevyModel::subordinate_brownian(1, 0.0, Arc::new(Capped), Tolerance::default());
        assert!(matches!(r, Err(Error::BoundedExponent)));
    }

    #[test]
    fn tempered_table_is_continuous_and_positive() {
        let m = make_model("tempered-stable", 3, &[("alpha", 1.0)]).unwrap();
        let mut prev = 0.0;
        for &u in &[1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
            let a = m.psi_fast(u);
            let b = m.psi(u).unwrap();
            assert!(a > prev);
            assert!((a / b - 1.0).abs() < 1e-5, "u={u} table {a} quad {b}");
            prev = a;
        }
        // high frequency behaves like the stable exponent
        assert!((m.psi_fast(1e6) / 1e6 - 1.0).abs() < 1e-2);
    }
}
