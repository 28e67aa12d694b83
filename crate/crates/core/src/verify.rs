//! Bound-verification harness.
//!
//! A two-sided estimate with unknown constants is checked by computing
//! `observed / shape` on a grid: the check passes when the ratio stays
//! within a configured max/min ceiling and shows no monotone drift across
//! scales. Explicit constants (the factor 2 in the exit-time upper bound,
//! 24 in the exit-place bound, the sign of barrier operators, the escape
//! probability 1/2) are asserted directly as hard assertions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::characteristics::{pruitt_h, scaling_indices, script_j};
use crate::domains::{Domain, DomainSpec};
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::{gamma, log_grid};
use crate::model::{FamilySpec, LevyModel};
use crate::renewal::{condition_a, RenewalTable};
use crate::simulate::{dynkin_detailed, McEstimate, Runner, SimConfig, Simulator};

/// Acceptance thresholds of the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Largest admissible max/min of the ratio to the bound shape.
    pub ceiling: f64,
    /// Width of confidence intervals in standard errors.
    pub sigmas: f64,
    /// Log-log slope of the ratio per unit of `ln(scale)` tolerated before a
    /// significant drift counts as divergence.
    pub trend_tolerance: f64,
    /// Largest relative confidence half-width of an exit-time estimate.
    pub max_relative_ci: f64,
    /// Largest relative confidence half-width of a Dynkin denominator.
    pub max_dynkin_ci: f64,
    /// Survival estimates need at least this many surviving replicas.
    pub min_survivors: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            ceiling: 1e3,
            sigmas: 3.0,
            trend_tolerance: 0.1,
            max_relative_ci: 0.2,
            max_dynkin_ci: 0.3,
            min_survivors: 50.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// An explicit-constant inequality evaluated at every grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardAssertion {
    pub name: String,
    pub holds: bool,
    /// Largest `(observed − allowance) / bound` over the grid; `≤ 1` when
    /// the assertion holds.
    pub worst: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl RatioStats {
    fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return Self {
                min: 0.0,
                max: 0.0,
                median: 0.0,
            };
        }
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            min: v[0],
            max: v[n - 1],
            median,
        }
    }

    /// `max / min`, infinite when the minimum is not positive.
    pub fn spread(&self) -> f64 {
        if self.min > 0.0 {
            self.max / self.min
        } else {
            f64::MAX
        }
    }
}

/// Weighted least-squares slope of `ln(ratio)` against `ln(scale)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub slope: f64,
    pub std_error: f64,
    pub divergent: bool,
}

/// Result of one verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub model: String,
    pub domain: String,
    /// Name of the grid variable (`delta`, `t`, `|x|`, `r`).
    pub grid_label: String,
    pub grid: Vec<f64>,
    /// Lower bound shape; the ratio is taken against it.
    pub lhs: Vec<f64>,
    /// Upper bound shape, including explicit constants where known.
    pub rhs: Vec<f64>,
    pub observed: Vec<McEstimate>,
    pub ratio: Vec<f64>,
    pub ratio_stats: RatioStats,
    pub trend: Option<Trend>,
    /// Exact values where a closed form exists.
    pub oracle: Option<Vec<f64>>,
    pub empirical_constants: BTreeMap<String, f64>,
    pub hard: Vec<HardAssertion>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl BoundCheck {
    fn new(name: &str, model: &LevyModel, domain: String, grid_label: &str) -> Self {
        Self {
            name: name.to_string(),
            model: model.name(),
            domain,
            grid_label: grid_label.to_string(),
            grid: Vec::new(),
            lhs: Vec::new(),
            rhs: Vec::new(),
            observed: Vec::new(),
            ratio: Vec::new(),
            ratio_stats: RatioStats {
                min: 0.0,
                max: 0.0,
                median: 0.0,
            },
            trend: None,
            oracle: None,
            empirical_constants: BTreeMap::new(),
            hard: Vec::new(),
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
        }
    }

    fn push(&mut self, x: f64, lhs: f64, rhs: f64, e: McEstimate) {
        self.grid.push(x);
        self.lhs.push(lhs);
        self.rhs.push(rhs);
        self.ratio.push(e.mean / lhs);
        self.observed.push(e);
    }

    fn constant(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.empirical_constants.insert(name.to_string(), value);
        }
    }

    /// Adds `observed − allowance ≤ bound` at every point, with the
    /// allowance `k·SE + bias band`.
    fn assert_upper(&mut self, name: &str, bounds: &[f64], k: f64) {
        let worst = self
            .observed
            .iter()
            .zip(bounds)
            .map(|(e, b)| (e.mean - k * e.std_error - e.bias_band) / b)
            .fold(f64::MIN, f64::max);
        self.hard.push(HardAssertion {
            name: name.to_string(),
            holds: worst <= 1.0,
            worst,
        });
    }

    /// True when any hard assertion fails.
    pub fn hard_failure(&self) -> bool {
        self.hard.iter().any(|h| !h.holds)
    }

    /// A drift counts as divergent only when the full grid and both of its
    /// halves show a significant slope of the same sign; a bounded ratio that
    /// settles towards a limit flattens on at least one half.
    fn compute_trend(&mut self, cfg: &VerifyConfig) {
        let mut pts = Vec::new();
        for ((x, r), e) in self.grid.iter().zip(&self.ratio).zip(&self.observed) {
            if !(*r > 0.0) || !r.is_finite() {
                continue;
            }
            let rel = (e.std_error / e.mean).max(1e-6);
            pts.push((x.ln(), r.ln(), 1.0 / (rel * rel)));
        }
        if pts.len() < 3 {
            self.notes.push("too few positive ratios for a trend test".into());
            return;
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let significant = |(slope, se): (f64, f64)| {
            if slope.abs() > cfg.trend_tolerance + cfg.sigmas * se {
                slope.signum()
            } else {
                0.0
            }
        };
        let (slope, std_error) = weighted_slope(&pts);
        let half = pts.len().div_ceil(2);
        let all = significant((slope, std_error));
        let divergent = all != 0.0
            && significant(weighted_slope(&pts[..half])) == all
            && significant(weighted_slope(&pts[pts.len() - half..])) == all;
        self.trend = Some(Trend {
            slope,
            std_error,
            divergent,
        });
    }

    /// Fills the ratio statistics and the verdict. `inconclusive` carries the
    /// reason when the confidence criterion was missed.
    fn finish(mut self, cfg: &VerifyConfig, comparability: bool, inconclusive: Option<String>) -> Self {
        self.ratio_stats = RatioStats::of(&self.ratio);
        if comparability {
            self.compute_trend(cfg);
        }
        let oracle_ok = match &self.oracle {
            Some(o) => self.observed.iter().zip(o).all(|(e, v)| e.agrees_with(*v, cfg.sigmas)),
            None => true,
        };
        if !oracle_ok {
            self.notes.push("oracle outside the confidence band".into());
        }
        let spread_ok = !comparability || self.ratio_stats.spread() <= cfg.ceiling;
        if !spread_ok {
            self.notes.push(format!(
                "ratio spread {:.3e} exceeds the ceiling",
                self.ratio_stats.spread()
            ));
        }
        let trend_ok = self.trend.map_or(true, |t| !t.divergent);
        if !trend_ok {
            self.notes.push("ratio drifts monotonically across scales".into());
        }
        self.verdict = if self.hard_failure() {
            Verdict::Fail
        } else if let Some(reason) = inconclusive {
            self.notes.push(reason);
            Verdict::Inconclusive
        } else if oracle_ok && spread_ok && trend_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }
}

fn weighted_slope(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.0 * p.2).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.1 * p.2).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

fn axis_point(d: usize, along: f64) -> Vec<f64> {
    let mut x = vec![0.0; d];
    x[0] = along;
    x
}

/// Points on the ray from the origin along the first axis with the requested
/// distances to the complement; the origin must lie in the domain and the
/// distance must decrease along the ray.
pub fn points_at_distances(domain: &Domain, deltas: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = domain.dimension();
    let origin = vec![0.0; d];
    let d0 = domain.delta(&origin);
    if !(d0 > 0.0) {
        return Err(Error::Precondition("the origin must lie in the domain".into()));
    }
    deltas
        .iter()
        .map(|&target| {
            if !(target > 0.0) || target > d0 {
                return Err(Error::OutOfRange(format!(
                    "distance {target} not attained on the axis ray"
                )));
            }
            let mut hi = d0.max(1.0);
            while domain.delta(&axis_point(d, hi)) > 0.0 {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::Precondition("domain unbounded along the axis".into()));
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if domain.delta(&axis_point(d, mid)) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(axis_point(d, 0.5 * (lo + hi)))
        })
        .collect()
}

fn relative_ci_exceeded(e: &McEstimate, cfg: &VerifyConfig, limit: f64) -> bool {
    cfg.sigmas * e.std_error > limit * e.mean.abs()
}

/// Exit times of the ball `B(0, r)` from points at distance `δ = q·r` to the
/// boundary, against the shape `V(δ)V(r)`, the hard upper bound
/// `2V(r)V(r − |x|)` and Pruitt's `1/sqrt(h(r)h(δ))`.
#[allow(clippy::too_many_arguments)]
pub fn check_exit_ball<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    r: f64,
    delta_over_r: &[f64],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    if delta_over_r.iter().any(|q| !(*q > 0.0 && *q <= 1.0)) {
        return Err(Error::param("delta_over_r", "entries must lie in (0, 1]"));
    }
    let d = model.dimension();
    let ball = Domain::ball(d, r)?;
    let simulator = Simulator::new(model, &ball, sim)?.with_renewal(table);
    let v = |x: f64| table.v(x);
    let hr = pruitt_h(model, r)?;
    let mut check = BoundCheck::new("exit-ball", model, ball.name(), "delta");
    let mut upper = Vec::new();
    let mut pruitt_ratio = Vec::new();
    let mut wide = None;
    for &q in delta_over_r {
        let delta = q * r;
        let e = simulator.exit_time(&axis_point(d, r - delta), runner)?;
        if relative_ci_exceeded(&e, cfg, cfg.max_relative_ci) {
            wide = Some(format!(
                "confidence interval above {:.0}% at delta = {delta}",
                100.0 * cfg.max_relative_ci
            ));
        }
        pruitt_ratio.push(e.mean * (hr * pruitt_h(model, delta)?).sqrt());
        let u = 2.0 * v(r) * v(delta);
        upper.push(u);
        check.push(delta, v(delta) * v(r), u, e);
    }
    check.assert_upper("exit-time-upper", &upper, cfg.sigmas);
    let center = simulator.exit_time(&vec![0.0; d], runner)?;
    check.constant("pruitt_center", center.mean * hr);
    let ps = RatioStats::of(&pruitt_ratio);
    check.constant("pruitt_grid_min", ps.min);
    check.constant("pruitt_grid_max", ps.max);
    let lower = check.ratio.iter().copied().fold(f64::INFINITY, f64::min);
    check.constant("lower", lower);
    check.constant("upper", check.ratio.iter().copied().fold(0.0, f64::max));
    Ok(check.finish(cfg, true, wide))
}

/// Exit times of a bounded `C^{1,1}` domain at the given points against
/// `V(δ_D(x))V(r₀)`; the upper shape carries `(H_{r₀}/𝓙(r₀)²)(V(diam)/V(r₀))²`
/// and intervals use the explicit factor 2.
#[allow(clippy::too_many_arguments)]
pub fn check_exit_c11<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    domain: &Domain,
    points: &[Vec<f64>],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    if !domain.is_bounded() {
        return Err(Error::Precondition("exit-time check needs a bounded domain".into()));
    }
    let r0 = domain.c11_radius();
    let mut check = BoundCheck::new("exit-c11", model, domain.name(), "delta");
    let j = script_j(model, table, r0, None)?;
    if j.degenerate {
        check.notes.push(format!(
            "J(r0) vanishes at r0 = {r0}; use the comparison E^x tau_D <= E^x tau of the enclosing ball instead"
        ));
        return Ok(check.finish(cfg, false, Some("degenerate mean-value constant".into())));
    }
    let h = condition_a(table, r0)?.h_r;
    let v = |x: f64| table.v(x);
    let interval = domain.dimension() == 1;
    let factor = if interval {
        2.0
    } else {
        h / (j.value * j.value) * (v(domain.diameter()) / v(r0)).powi(2)
    };
    let simulator = Simulator::new(model, domain, sim)?.with_renewal(table);
    let mut wide = None;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|a, b| domain.delta(&points[*a]).total_cmp(&domain.delta(&points[*b])));
    for i in order {
        let x = &points[i];
        let delta = domain.delta(x);
        if !(delta > 0.0) {
            return Err(Error::Precondition("check points must lie inside the domain".into()));
        }
        let e = simulator.exit_time(x, runner)?;
        if relative_ci_exceeded(&e, cfg, cfg.max_relative_ci) {
            wide = Some(format!(
                "confidence interval above {:.0}% at delta = {delta}",
                100.0 * cfg.max_relative_ci
            ));
        }
        let shape = v(delta) * v(r0);
        check.push(delta, shape, factor * shape, e);
    }
    if interval {
        let rhs = check.rhs.clone();
        check.assert_upper("interval-upper", &rhs, cfg.sigmas);
    }
    check.constant("H_r0", h);
    check.constant("J_r0", j.value);
    check.constant("lower", check.ratio.iter().copied().fold(f64::INFINITY, f64::min));
    let upper = check
        .observed
        .iter()
        .zip(&check.rhs)
        .map(|(e, b)| e.mean / b)
        .fold(0.0, f64::max);
    check.constant("upper", upper);
    Ok(check.finish(cfg, true, wide))
}

/// Survival configuration: where the process starts and which domain it
/// must stay in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurvivalKind {
    /// `(0, ∞)` in dimension one, start at `x`.
    HalfLine { x: f64 },
    /// `B(0, radius)`, start at distance `delta` from the sphere.
    Ball { radius: f64, delta: f64 },
    /// Complement of `B̄(0, radius)`, start at distance `delta`.
    BallComplement { radius: f64, delta: f64 },
    /// A bounded `C^{1,1}` domain, start on the first axis at distance `delta`.
    C11 { domain: DomainSpec, delta: f64 },
}

/// Survival probabilities over a time grid against the shape of the
/// configuration.
#[allow(clippy::too_many_arguments)]
pub fn check_survival<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    kind: &SurvivalKind,
    times: &[f64],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    if times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::param("times", "must be positive"));
    }
    let d = model.dimension();
    let v = |x: f64| table.v(x);
    let (domain, x, shape): (Domain, Vec<f64>, ShapeFn<'_>) = match kind {
        SurvivalKind::HalfLine { x } => {
            if d != 1 {
                return Err(Error::Precondition("the half-line check is one-dimensional".into()));
            }
            let s = model.psi_star(1.0 / x);
            (
                Domain::half_line(),
                vec![*x],
                alloc::boxed::Box::new(move |t: f64| (1.0 / (t * s).sqrt()).min(1.0)),
            )
        }
        SurvivalKind::Ball { radius, delta } => {
            let dom = Domain::ball(d, *radius)?;
            let vd = v(*delta);
            (
                dom,
                axis_point(d, radius - delta),
                alloc::boxed::Box::new(move |t: f64| (vd / t.sqrt()).min(1.0)),
            )
        }
        SurvivalKind::BallComplement { radius, delta } => {
            let upper = scaling_indices(model, 1e-4 / radius, 1e4 / radius)?
                .wusc
                .map_or(2.0, |p| p.index);
            if d as f64 <= upper {
                return Err(Error::Precondition(format!(
                    "ball-complement survival needs d > upper scaling index (d = {d}, index {upper:.3}); unsupported"
                )));
            }
            let dom = Domain::ball_complement(d, *radius)?;
            let (vd, vr) = (v(*delta), v(*radius));
            (
                dom,
                axis_point(d, radius + delta),
                alloc::boxed::Box::new(move |t: f64| (vd / t.sqrt().min(vr)).min(1.0)),
            )
        }
        SurvivalKind::C11 { domain, delta } => {
            let dom = domain.build(d)?;
            let r0 = dom.c11_radius();
            if times.iter().any(|t| t.sqrt() > v(r0)) {
                return Err(Error::Precondition("C11 survival shape holds for t <= V(r0)^2".into()));
            }
            let x = points_at_distances(&dom, &[*delta])?.remove(0);
            let vd = v(*delta);
            (dom, x, alloc::boxed::Box::new(move |t: f64| (vd / t.sqrt()).min(1.0)))
        }
    };
    let simulator = Simulator::new(model, &domain, sim)?.with_renewal(table);
    let estimates = simulator.survival(&x, times, runner)?;
    let mut check = BoundCheck::new("survival", model, domain.name(), "t");
    let mut scarce = None;
    for (&t, e) in times.iter().zip(estimates) {
        if e.mean * (e.replicas as f64) < cfg.min_survivors {
            scarce = Some(format!(
                "fewer than {} surviving replicas at t = {t}",
                cfg.min_survivors
            ));
        }
        let s = shape(t);
        check.push(t, s, s, e);
    }
    if let (SurvivalKind::HalfLine { x }, true) = (kind, model.nu().is_zero()) {
        let sigma = model.sigma();
        check.oracle = Some(times.iter().map(|t| libm::erf(x / (2.0 * sigma * t.sqrt()))).collect());
    }
    check.constant("lower", check.ratio_min());
    check.constant("upper", check.ratio_max());
    Ok(check.finish(cfg, true, scarce))
}

impl BoundCheck {
    fn ratio_min(&self) -> f64 {
        self.ratio.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn ratio_max(&self) -> f64 {
        self.ratio.iter().copied().fold(0.0, f64::max)
    }
}

/// Finite-horizon probabilities of hitting `B̄(0, R)` from `|x| = m·R`
/// against `V²(|x|)R^d/(|x|^d V²(R))`, and the smallest tested multiple
/// with escape probability at least 1/2.
#[allow(clippy::too_many_arguments)]
pub fn check_hitting<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    radius: f64,
    multiples: &[f64],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    let d = model.dimension();
    if d <= 2 {
        let upper = scaling_indices(model, 1e-4 / radius, 1e4 / radius)?.wusc;
        match upper {
            Some(p) if p.index < d as f64 => {}
            _ => {
                return Err(Error::Precondition(
                    "recurrent regime: hitting check needs transience".into(),
                ))
            }
        }
    }
    if multiples.iter().any(|m| !(*m > 1.0)) {
        return Err(Error::param("multiples", "must exceed 1"));
    }
    let horizon = sim
        .horizon
        .ok_or_else(|| Error::Precondition("hitting check needs a finite horizon".into()))?;
    let domain = Domain::ball_complement(d, radius)?;
    let simulator = Simulator::new(model, &domain, sim)?.with_renewal(table);
    let v = |x: f64| table.v(x);
    let df = d as f64;
    let mut check = BoundCheck::new("hitting", model, domain.name(), "|x|");
    for &m in multiples {
        let x = axis_point(d, m * radius);
        let (main, fine) = simulator.run(&x, runner);
        let mut e = simulator.summarize(
            crate::simulate::Estimator::Hitting,
            &main,
            &fine,
            |p| if p.censored { 0.0 } else { 1.0 },
            0.0,
        );
        e.censored = 0;
        let norm = m * radius;
        let shape = v(norm).powi(2) * radius.powf(df) / (norm.powf(df) * v(radius).powi(2));
        check.push(norm, shape, shape, e);
    }
    if model.nu().is_zero() && d == 3 {
        let s = model.sigma();
        check.oracle = Some(
            check
                .grid
                .iter()
                .map(|&n| radius / n * libm::erfc((n - radius) / (2.0 * s * horizon.sqrt())))
                .collect(),
        );
    }
    check
        .notes
        .push(format!("finite horizon {horizon}: probabilities are lower bounds"));
    let escape = check
        .grid
        .iter()
        .zip(&check.observed)
        .find(|(_, e)| e.mean + cfg.sigmas * e.std_error + e.bias_band <= 0.5)
        .map(|(n, _)| n / radius);
    check.hard.push(HardAssertion {
        name: "escape-half".into(),
        holds: escape.is_some(),
        worst: check
            .observed
            .iter()
            .map(|e| (e.mean + cfg.sigmas * e.std_error + e.bias_band) / 0.5)
            .fold(f64::INFINITY, f64::min),
    });
    if let Some(c) = escape {
        check.constant("escape_multiple", c);
    }
    check.constant("upper", check.ratio_max());
    Ok(check.finish(cfg, true, None))
}

/// Which barrier function `g = V∘δ` is examined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Barrier {
    /// `δ` to the complement of `B(0, r)`, sampled inside; `−𝓐_t g ≥ 0`.
    Ball,
    /// `δ` to `B̄(0, r)`, sampled outside; `𝓐_t g ≥ 0`.
    Complement,
}

/// Small-ball radius used for Dynkin estimates at distance `δ`.
pub fn dynkin_radius(delta: f64) -> f64 {
    0.25 * delta
}

/// Sign and size of the Dynkin operator applied to the barrier `V∘δ`:
/// the signed value `∓𝓐_t g` must be nonnegative and at most
/// `C·H_r/V(r)` for a finite empirical `C`.
#[allow(clippy::too_many_arguments)]
pub fn check_barriers<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    r: f64,
    deltas: &[f64],
    barrier: Barrier,
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    if deltas.iter().any(|q| !(*q > 0.0 && *q < r / 4.0)) {
        return Err(Error::param("deltas", "entries must lie in (0, r/4)"));
    }
    let d = model.dimension();
    let hr = condition_a(table, r)?.h_r;
    let vr = table.v(r);
    let (domain, sign) = match barrier {
        Barrier::Ball => (Domain::ball(d, r)?, -1.0),
        Barrier::Complement => (Domain::ball_complement(d, r)?, 1.0),
    };
    let g = |y: &[f64]| table.v(domain.delta(y));
    let mut check = BoundCheck::new(
        match barrier {
            Barrier::Ball => "barrier-ball",
            Barrier::Complement => "barrier-complement",
        },
        model,
        domain.name(),
        "delta",
    );
    let scale = hr / vr;
    let mut wide = None;
    let mut sign_bounds = Vec::new();
    for &delta in deltas {
        let x = match barrier {
            Barrier::Ball => axis_point(d, r - delta),
            Barrier::Complement => axis_point(d, r + delta),
        };
        let dy = dynkin_detailed(model, &g, &x, dynkin_radius(delta), sim, runner)?;
        if cfg.sigmas * dy.exit_time_se > cfg.max_dynkin_ci * dy.exit_time {
            wide = Some(format!("Dynkin denominator too uncertain at delta = {delta}"));
        }
        let mut e = dy.estimate;
        e.mean *= sign;
        // −observed ≤ allowance, i.e. the signed value is not significantly negative
        sign_bounds.push(e.std_error * cfg.sigmas + e.bias_band);
        check.push(delta, scale, scale, e);
    }
    let worst = check
        .observed
        .iter()
        .zip(&sign_bounds)
        .map(|(e, a)| -e.mean - a)
        .fold(f64::MIN, f64::max);
    check.hard.push(HardAssertion {
        name: "barrier-sign".into(),
        holds: worst <= 0.0,
        worst,
    });
    check.constant("H_r", hr);
    check.constant("upper", check.ratio_max());
    check.notes.push(format!(
        "small-ball radius delta/4, signed value {}A_t g",
        if sign < 0.0 { "-" } else { "+" }
    ));
    Ok(check.finish(cfg, false, wide))
}

/// Dynkin identities with exact targets: `𝓐_t V₁ = 0` on the half-space
/// `{x₁ > 0}` and, where `s_D` has a closed form (stable and Brownian balls),
/// `𝓐_t s_D = −1` in `B(0, 1)`.
#[allow(clippy::too_many_arguments)]
pub fn check_dynkin_identity<R: Runner>(
    model: &LevyModel,
    table: &RenewalTable,
    identity: DynkinIdentity,
    deltas: &[f64],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    let d = model.dimension();
    let (name, domain, target) = match identity {
        DynkinIdentity::HalfSpaceHarmonic => ("half-space-harmonic", Domain::upper_half_space(d)?, 0.0),
        DynkinIdentity::MeanExitTime => ("mean-exit-time", Domain::ball(d, 1.0)?, -1.0),
    };
    let exit = match identity {
        DynkinIdentity::MeanExitTime => Some(
            ball_exit_time_closed_form(model)
                .ok_or_else(|| Error::Precondition("no closed form for the mean exit time of this model".into()))?,
        ),
        DynkinIdentity::HalfSpaceHarmonic => None,
    };
    let f = |y: &[f64]| match &exit {
        Some(s) => s(y),
        None => table.v(y[0].max(0.0)),
    };
    let mut check = BoundCheck::new(name, model, domain.name(), "delta");
    let mut wide = None;
    for &delta in deltas {
        let x = match identity {
            DynkinIdentity::HalfSpaceHarmonic => axis_point(d, delta),
            DynkinIdentity::MeanExitTime => axis_point(d, 1.0 - delta),
        };
        if !(domain.delta(&x) > 0.0) {
            return Err(Error::param("deltas", "points must lie inside the domain"));
        }
        let dy = dynkin_detailed(model, &f, &x, dynkin_radius(delta), sim, runner)?;
        if cfg.sigmas * dy.exit_time_se > cfg.max_dynkin_ci * dy.exit_time {
            wide = Some(format!("Dynkin denominator too uncertain at delta = {delta}"));
        }
        check.push(delta, 1.0, 1.0, dy.estimate);
    }
    check.oracle = Some(vec![target; check.grid.len()]);
    Ok(check.finish(cfg, false, wide))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynkinIdentity {
    HalfSpaceHarmonic,
    MeanExitTime,
}

type ExitTimeFn = alloc::boxed::Box<dyn Fn(&[f64]) -> f64 + Sync>;
type ShapeFn<'a> = alloc::boxed::Box<dyn Fn(f64) -> f64 + 'a>;

/// `s_B(x) = E^x τ_{B(0,1)}` when known in closed form: isotropic stable
/// `Γ(d/2)/(2^α Γ(1+α/2) Γ((d+α)/2)) (1 − |x|²)^{α/2}` and Brownian
/// `(1 − |x|²)/(2dσ²)`; zero outside the ball.
pub fn ball_exit_time_closed_form(model: &LevyModel) -> Option<ExitTimeFn> {
    let d = model.dimension();
    let df = d as f64;
    let extra = model.spec().and_then(|s| s.sigma).unwrap_or(0.0);
    let (c, p) = match model.spec().map(|s| &s.family) {
        Some(FamilySpec::Brownian) => (1.0 / (2.0 * df * model.sigma().powi(2)), 1.0),
        Some(FamilySpec::IsotropicStable { alpha }) if *alpha == 2.0 && extra == 0.0 => (1.0 / (2.0 * df), 1.0),
        Some(FamilySpec::IsotropicStable { alpha }) if extra == 0.0 => {
            let a = *alpha;
            (
                gamma(df / 2.0) / (2f64.powf(a) * gamma(1.0 + a / 2.0) * gamma((df + a) / 2.0)),
                a / 2.0,
            )
        }
        _ => return None,
    };
    Some(alloc::boxed::Box::new(move |y: &[f64]| {
        let q = 1.0 - y.iter().map(|v| v * v).sum::<f64>();
        if q > 0.0 {
            c * q.powf(p)
        } else {
            0.0
        }
    }))
}

/// Exit-place tail `P^x(|X_{τ_D}| ≥ r)` against `24 h(r) E^x τ_D` on a
/// grid of `r`, from one set of replicas.
#[allow(clippy::too_many_arguments)]
pub fn check_exit_place<R: Runner>(
    model: &LevyModel,
    domain: &Domain,
    x: &[f64],
    radii: &[f64],
    sim: &SimConfig,
    cfg: &VerifyConfig,
    runner: &R,
) -> Result<BoundCheck> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !domain.is_bounded() {
        return Err(Error::Precondition("exit-place check needs a bounded domain".into()));
    }
    for &r in radii {
        if !(norm <= r / 2.0 && norm + domain.diameter() <= r) {
            return Err(Error::Precondition(format!(
                "need |x| <= r/2 and D inside B_r, r = {r}"
            )));
        }
    }
    if !domain.contains(x) {
        return Err(Error::Precondition("start point outside the domain".into()));
    }
    let simulator = Simulator::new(model, domain, sim)?;
    let (main, fine) = simulator.run(x, runner);
    let tau = simulator.summarize(crate::simulate::Estimator::ExitTime, &main, &fine, |p| p.exit_time, 0.0);
    let mut check = BoundCheck::new("exit-place", model, domain.name(), "r");
    for &r in radii {
        let tail = move |p: &crate::simulate::PathOutcome| {
            if p.exit_position.iter().map(|v| v * v).sum::<f64>().sqrt() >= r {
                1.0
            } else {
                0.0
            }
        };
        let e = simulator.summarize(crate::simulate::Estimator::ExitPlaceTail, &main, &fine, tail, 0.0);
        // the bound with the exit time at its upper confidence limit
        let bound = 24.0 * pruitt_h(model, r)? * (tau.mean + cfg.sigmas * tau.std_error + tau.bias_band);
        check.push(r, bound, bound, e);
    }
    let rhs = check.rhs.clone();
    check.assert_upper("exit-place-24h", &rhs, cfg.sigmas);
    check.constant("mean_exit_time", tau.mean);
    check.constant("upper", check.ratio_max());
    Ok(check.finish(cfg, false, None))
}

/// Default `r` grid for [`check_exit_place`]: three decades above `r_min`.
pub fn exit_place_radii(r_min: f64) -> Vec<f64> {
    log_grid(r_min, 1e3 * r_min, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_model;
    use crate::simulate::Estimator;

    fn estimate(mean: f64, se: f64) -> McEstimate {
        McEstimate {
            estimator: Estimator::ExitTime,
            mean,
            std_error: se,
            replicas: 100,
            seed: 0,
            bias_band: 0.0,
            absorbed: 0,
            censored: 0,
            delta_abs: 0.0,
            mean_steps: 1.0,
        }
    }

    fn synthetic(exponent: f64) -> BoundCheck {
        let m = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let mut c = BoundCheck::new("synthetic", &m, "none".into(), "delta");
        for &x in &[0.01, 0.1, 1.0, 10.0] {
            c.push(x, 1.0, 1.0, estimate(x.powf(exponent), 1e-3 * x.powf(exponent)));
        }
        c
    }

    #[test]
    fn ratio_stats_median() {
        let s = RatioStats::of(&[3.0, 1.0, 2.0, 10.0]);
        assert_eq!((s.min, s.max, s.median), (1.0, 10.0, 2.5));
        assert_eq!(s.spread(), 10.0);
    }

    #[test]
    fn flat_ratio_passes_power_drift_fails() {
        let cfg = VerifyConfig::default();
        assert_eq!(synthetic(0.0).finish(&cfg, true, None).verdict, Verdict::Pass);
        let drift = synthetic(0.5).finish(&cfg, true, None);
        assert_eq!(drift.verdict, Verdict::Fail);
        assert!((drift.trend.unwrap().slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn saturating_ratio_is_not_divergent() {
        let m = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let mut c = BoundCheck::new("saturating", &m, "none".into(), "delta");
        for &x in &[0.02, 0.1, 0.5, 0.9] {
            let v = 2.0 - x;
            c.push(x, 1.0, 1.0, estimate(v, 1e-3 * v));
        }
        let c = c.finish(&VerifyConfig::default(), true, None);
        assert!(c.trend.unwrap().slope.abs() > 0.1);
        assert_eq!(c.verdict, Verdict::Pass);
    }

    #[test]
    fn hard_failure_dominates() {
        let mut c = synthetic(0.0);
        c.assert_upper("bound", &[0.5; 4], 3.0);
        let c = c.finish(&VerifyConfig::default(), true, Some("wide".into()));
        assert!(c.hard_failure());
        assert_eq!(c.verdict, Verdict::Fail);
    }

    #[test]
    fn axis_points_hit_requested_distance() {
        let e = Domain::ellipsoid(vec![2.0, 1.0]).unwrap();
        let pts = points_at_distances(&e, &[0.5, 0.02]).unwrap();
        for (p, want) in pts.iter().zip([0.5, 0.02]) {
            assert!((e.delta(p) - want).abs() < 1e-9);
        }
        assert!(points_at_distances(&e, &[5.0]).is_err());
    }

    #[test]
    fn cauchy_interval_exit_time_closed_form() {
        let m = make_model("isotropic-stable", 1, &[("alpha", 1.0)]).unwrap();
        let s = ball_exit_time_closed_form(&m).unwrap();
        assert!((s(&[0.6]) - 0.8).abs() < 1e-12);
        assert_eq!(s(&[1.5]), 0.0);
        let b = make_model("brownian", 3, &[("sigma", core::f64::consts::FRAC_1_SQRT_2)]).unwrap();
        let s = ball_exit_time_closed_form(&b).unwrap();
        assert!((s(&[0.0, 0.0, 0.0]) - 1.0 / 3.0).abs() < 1e-12);
        assert!(ball_exit_time_closed_form(&make_model("variance-gamma", 2, &[]).unwrap()).is_none());
    }
}
