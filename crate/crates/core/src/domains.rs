//! Open regions with their distance to the complement `δ_D`, `C^{1,1}`
//! localization radius `r₀` and diameter.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;

/// Signed distance function: positive inside, equal to `dist(x, D^c)` there.
pub type Sdf = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Geometric shapes.
#[derive(Clone)]
pub enum Shape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{|x − center| > radius}`.
    BallComplement {
        center: Vec<f64>,
        radius: f64,
    },
    /// `{⟨normal, x⟩ > offset}` with a unit normal.
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    /// `(0, ∞)` in dimension one.
    HalfLine,
    Generic {
        name: String,
        sdf: Sdf,
    },
}

impl fmt::Debug for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::BallComplement { center, radius } => f
                .debug_struct("BallComplement")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Shape::HalfSpace { normal, offset } => f
                .debug_struct("HalfSpace")
                .field("normal", normal)
                .field("offset", offset)
                .finish(),
            Shape::HalfLine => f.write_str("HalfLine"),
            Shape::Generic { name, .. } => f.debug_struct("Generic").field("name", name).finish_non_exhaustive(),
        }
    }
}

/// An open domain in `R^d`.
#[derive(Clone, Debug)]
pub struct Domain {
    shape: Shape,
    dimension: usize,
    c11_radius: f64,
    diameter: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

impl Domain {
    pub fn ball(dimension: usize, radius: f64) -> Result<Self> {
        Self::ball_at(vec![0.0; dimension], radius)
    }

    pub fn ball_at(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        check_positive("radius", radius)?;
        Ok(Self {
            dimension: center.len(),
            c11_radius: radius,
            diameter: 2.0 * radius,
            shape: Shape::Ball { center, radius },
        })
    }

    /// The open interval `(lo, hi)` in dimension one.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::param("interval", "need lo < hi"));
        }
        Self::ball_at(vec![0.5 * (lo + hi)], 0.5 * (hi - lo))
    }

    pub fn ball_complement(dimension: usize, radius: f64) -> Result<Self> {
        Self::ball_complement_at(vec![0.0; dimension], radius)
    }

    pub fn ball_complement_at(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(center.len())?;
        check_positive("radius", radius)?;
        Ok(Self {
            dimension: center.len(),
            c11_radius: radius,
            diameter: f64::INFINITY,
            shape: Shape::BallComplement { center, radius },
        })
    }

    pub fn half_space(normal: Vec<f64>, offset: f64) -> Result<Self> {
        check_dim(normal.len())?;
        let n = norm(&normal);
        if !(n > 0.0) || !offset.is_finite() {
            return Err(Error::param("normal", "must be a nonzero vector with finite offset"));
        }
        Ok(Self {
            dimension: normal.len(),
            c11_radius: f64::INFINITY,
            diameter: f64::INFINITY,
            shape: Shape::HalfSpace {
                normal: normal.iter().map(|v| v / n).collect(),
                offset: offset / n,
            },
        })
    }

    /// `{x₁ > 0}`.
    pub fn upper_half_space(dimension: usize) -> Result<Self> {
        let mut n = vec![0.0; dimension];
        n[0] = 1.0;
        Self::half_space(n, 0.0)
    }

    pub fn half_line() -> Self {
        Self {
            dimension: 1,
            c11_radius: f64::INFINITY,
            diameter: f64::INFINITY,
            shape: Shape::HalfLine,
        }
    }

    /// A domain given by its signed distance function, with declared
    /// `C^{1,1}` radius and diameter (nothing is inferred from the SDF).
    pub fn generic(
        dimension: usize,
        name: impl Into<String>,
        sdf: Sdf,
        c11_radius: f64,
        diameter: f64,
    ) -> Result<Self> {
        check_dim(dimension)?;
        check_positive("c11_radius", c11_radius)?;
        check_positive("diameter", diameter)?;
        if diameter.is_finite() && diameter < 2.0 * c11_radius {
            return Err(Error::param("diameter", "must be at least twice the C^{1,1} radius"));
        }
        Ok(Self {
            dimension,
            c11_radius,
            diameter,
            shape: Shape::Generic { name: name.into(), sdf },
        })
    }

    /// Centered ellipsoid `Σ x_i²/a_i² < 1` through the generic SDF path;
    /// `r₀` is the smallest principal radius of curvature `a_min²/a_max`.
    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        check_dim(semi_axes.len())?;
        for &a in &semi_axes {
            check_positive("semi_axes", a)?;
        }
        let amax = semi_axes.iter().cloned().fold(0.0, f64::max);
        let amin = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
        let d = semi_axes.len();
        let axes = semi_axes.clone();
        let sdf: Sdf = Arc::new(move |x: &[f64]| ellipsoid_inner_distance(&axes, x));
        Self::generic(
            d,
            format!("ellipsoid{semi_axes:?}"),
            sdf,
            amin * amin / amax,
            2.0 * amax,
        )
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// `C^{1,1}` localization radius `r₀` (`∞` for half-spaces).
    pub fn c11_radius(&self) -> f64 {
        self.c11_radius
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn is_bounded(&self) -> bool {
        self.diameter.is_finite()
    }

    /// Length scale used for default tolerances (absorption, jump cutoff).
    pub fn scale(&self) -> f64 {
        let s = self.c11_radius.min(0.5 * self.diameter);
        if s.is_finite() {
            s
        } else {
            1.0
        }
    }

    /// `δ_D(x) = dist(x, D^c)`, zero outside `D`.
    pub fn delta(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dimension);
        let v = match &self.shape {
            Shape::Ball { center, radius } => radius - dist(x, center),
            Shape::BallComplement { center, radius } => dist(x, center) - radius,
            Shape::HalfSpace { normal, offset } => normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() - offset,
            Shape::HalfLine => x[0],
            Shape::Generic { sdf, .. } => sdf(x),
        };
        if v > 0.0 {
            v
        } else {
            0.0
        }
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.delta(x) > 0.0
    }

    pub fn name(&self) -> String {
        match &self.shape {
            Shape::Ball { radius, .. } => format!("ball(r={radius})"),
            Shape::BallComplement { radius, .. } => format!("ball-complement(R={radius})"),
            Shape::HalfSpace { .. } => "half-space".into(),
            Shape::HalfLine => "half-line".into(),
            Shape::Generic { name, .. } => name.clone(),
        }
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::param("dimension", "must be positive"))
    } else {
        Ok(())
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, "must be positive"))
    }
}

/// Distance from an interior point to the boundary of the ellipsoid with
/// semi-axes `a` (zero outside). The closest boundary point is
/// `x_i = a_i² y_i / (t + a_i²)` where `t ∈ (−a_min², 0]` solves
/// `Σ (a_i y_i / (t + a_i²))² = 1`.
pub fn ellipsoid_inner_distance(a: &[f64], y: &[f64]) -> f64 {
    let y: Vec<f64> = y.iter().map(|v| v.abs()).collect();
    let level: f64 = a.iter().zip(&y).map(|(a, y)| (y / a) * (y / a)).sum();
    if level >= 1.0 {
        return 0.0;
    }
    let a2: Vec<f64> = a.iter().map(|v| v * v).collect();
    let amin = a2.iter().cloned().fold(f64::INFINITY, f64::min);
    let on_min: Vec<bool> = a2.iter().map(|v| *v <= amin * (1.0 + 1e-15)).collect();
    let g = |t: f64| -> f64 {
        a2.iter()
            .zip(&y)
            .map(|(q, v)| {
                let r = q.sqrt() * v / (t + q);
                r * r
            })
            .sum::<f64>()
            - 1.0
    };
    let minor_zero = y.iter().zip(&on_min).all(|(v, m)| !*m || *v == 0.0);
    if minor_zero {
        // the root may sit at the pole t = −a_min²
        let rest: f64 = a2
            .iter()
            .zip(&y)
            .zip(&on_min)
            .filter(|(_, m)| !**m)
            .map(|((q, v), _)| {
                let r = q.sqrt() * v / (q - amin);
                r * r
            })
            .sum();
        if rest <= 1.0 {
            let mut d2 = 0.0;
            for ((q, v), m) in a2.iter().zip(&y).zip(&on_min) {
                if !*m {
                    let x = q * v / (q - amin);
                    d2 += (x - v) * (x - v);
                }
            }
            return (d2 + amin * (1.0 - rest)).sqrt();
        }
    }
    let (mut lo, mut hi) = (-amin, 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    a2.iter()
        .zip(&y)
        .map(|(q, v)| {
            let x = q * v / (t + q);
            (x - v) * (x - v)
        })
        .sum::<f64>()
        .sqrt()
}

/// Serializable domain description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum DomainSpec {
    Ball {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    BallComplement {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Defaults to `{x₁ > 0}`.
    HalfSpace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        normal: Option<Vec<f64>>,
        #[serde(default)]
        offset: f64,
    },
    HalfLine,
    Interval {
        lo: f64,
        hi: f64,
    },
    Ellipsoid {
        semi_axes: Vec<f64>,
    },
}

impl DomainSpec {
    pub fn build(&self, dimension: usize) -> Result<Domain> {
        let center = |c: &Option<Vec<f64>>| -> Result<Vec<f64>> {
            match c {
                Some(v) if v.len() != dimension => Err(Error::param("center", "length must equal the dimension")),
                Some(v) => Ok(v.clone()),
                None => Ok(vec![0.0; dimension]),
            }
        };
        let need_1d = |what: &str| -> Result<()> {
            if dimension == 1 {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{what} requires dimension 1")))
            }
        };
        match self {
            DomainSpec::Ball { radius, center: c } => Domain::ball_at(center(c)?, *radius),
            DomainSpec::BallComplement { radius, center: c } => Domain::ball_complement_at(center(c)?, *radius),
            DomainSpec::HalfSpace { normal, offset } => {
                let n = match normal {
                    Some(v) if v.len() != dimension => {
                        return Err(Error::param("normal", "length must equal the dimension"))
                    }
                    Some(v) => v.clone(),
                    None => {
                        let mut v = vec![0.0; dimension];
                        v[0] = 1.0;
                        v
                    }
                };
                Domain::half_space(n, *offset)
            }
            DomainSpec::HalfLine => {
                need_1d("half-line")?;
                Ok(Domain::half_line())
            }
            DomainSpec::Interval { lo, hi } => {
                need_1d("interval")?;
                Domain::interval(*lo, *hi)
            }
            DomainSpec::Ellipsoid { semi_axes } => {
                if semi_axes.len() != dimension {
                    return Err(Error::param("semi_axes", "length must equal the dimension"));
                }
                Domain::ellipsoid(semi_axes.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_and_complement() {
        let b = Domain::ball(3, 2.0).unwrap();
        assert!((b.delta(&[0.5, 0.0, 0.0]) - 1.5).abs() < 1e-15);
        assert_eq!(b.delta(&[2.5, 0.0, 0.0]), 0.0);
        assert!(!b.contains(&[2.0, 0.0, 0.0]));
        let c = Domain::ball_complement(3, 1.0).unwrap();
        assert!((c.delta(&[0.0, 3.0, 0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(c.c11_radius(), 1.0);
        assert!(!c.is_bounded());
    }

    #[test]
    fn half_space_and_line() {
        let h = Domain::upper_half_space(3).unwrap();
        assert!(h.contains(&[1.0, 0.0, 0.0]));
        assert!(!h.contains(&[0.0, 5.0, 0.0]));
        let l = Domain::half_line();
        assert_eq!(l.delta(&[2.0]), 2.0);
        assert_eq!(l.delta(&[-2.0]), 0.0);
    }

    #[test]
    fn ellipsoid_distance_matches_sphere_and_axes() {
        let e = Domain::ellipsoid(vec![1.0, 1.0, 1.0]).unwrap();
        assert!((e.delta(&[0.3, 0.2, 0.1]) - (1.0 - (0.14f64).sqrt())).abs() < 1e-12);
        let e = Domain::ellipsoid(vec![3.0, 2.0, 1.0]).unwrap();
        assert!((e.delta(&[0.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        assert!((e.delta(&[2.9, 0.0, 0.0]) - 0.1).abs() < 1e-9);
        // beyond the focal point the nearest boundary point leaves the axis
        assert!(e.delta(&[2.5, 0.0, 0.0]) < 0.5);
        assert!((e.c11_radius() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.diameter(), 6.0);
        assert_eq!(e.delta(&[3.5, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn ellipsoid_distance_is_a_true_distance() {
        // the closest point lies on the surface at the reported distance
        let a = [3.0, 2.0, 1.0];
        let y = [1.0, 0.7, 0.4];
        let dd = ellipsoid_inner_distance(&a, &y);
        // brute-force minimum over a parametrized surface
        let mut best = f64::INFINITY;
        let n = 400;
        for i in 0..=n {
            let th = core::f64::consts::PI * i as f64 / n as f64;
            for j in 0..n {
                let ph = 2.0 * core::f64::consts::PI * j as f64 / n as f64;
                let p = [a[0] * th.sin() * ph.cos(), a[1] * th.sin() * ph.sin(), a[2] * th.cos()];
                best = best.min(dist(&p, &y));
            }
        }
        assert!(dd <= best + 1e-9 && dd > best - 1e-3, "{dd} vs {best}");
    }

    #[test]
    fn spec_round_trip_rejects_bad_dimension() {
        assert!(DomainSpec::HalfLine.build(2).is_err());
        assert!(DomainSpec::Interval { lo: -1.0, hi: 1.0 }
            .build(1)
            .unwrap()
            .contains(&[0.9]));
        assert!(DomainSpec::Ball {
            radius: 1.0,
            center: Some(vec![0.0])
        }
        .build(2)
        .is_err());
    }
}
