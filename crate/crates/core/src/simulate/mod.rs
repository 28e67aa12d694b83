//! Monte-Carlo path simulation and the estimators built on it.
//!
//! Paths are skeletons with an adaptive step: at a state `y` with
//! `δ = δ_D(y)` the step is `dt ≤ p_miss / (24 h(δ/2))`, which bounds the
//! chance of an unrecorded excursion out of `D` during the step by
//! `p_miss`, because `P(|X_t| ≥ r) ≤ 24 h(r) t`. States closer than
//! `δ_abs` to the complement are declared exited.
//!
//! Every replica draws from its own ChaCha8 stream (master seed, stream =
//! replica index) and results are folded in index order, so estimates are
//! bit-identical whatever runner executes the replicas.

mod sampler;

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characteristics::{pruitt, pruitt_table};
use crate::domains::Domain;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float;
use crate::math::LogLogTable;
use crate::model::LevyModel;
use crate::renewal::RenewalTable;

pub use sampler::{default_epsilon, positive_stable, symmetric_stable, IncrementSampler, RadiusTable};

/// Executes independent replicas; implementations must return results in
/// index order.
pub trait Runner: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs replicas one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Runner for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Simulation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub replicas: usize,
    pub seed: u64,
    /// Per-step bound on the probability of an unrecorded boundary crossing.
    pub p_miss: f64,
    /// Cap on the time step; unbounded when absent.
    pub dt_max: Option<f64>,
    /// Time horizon; unbounded when absent.
    pub horizon: Option<f64>,
    /// Small-jump cutoff; see [`default_epsilon`] when absent.
    pub epsilon: Option<f64>,
    /// Absorption tolerance; `10⁻⁴ ×` domain scale when absent.
    pub delta_abs: Option<f64>,
    /// Replicas re-run at `p_miss / 4` for the bias band; automatic when
    /// absent, `0` disables.
    pub richardson_replicas: Option<usize>,
    /// Per-path step limit; a path reaching it counts as censored.
    pub max_steps: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            replicas: 10_000,
            seed: 0,
            p_miss: 0.05,
            dt_max: None,
            horizon: None,
            epsilon: None,
            delta_abs: None,
            richardson_replicas: None,
            max_steps: 100_000_000,
        }
    }
}

impl SimConfig {
    pub fn with_replicas(mut self, n: usize) -> Self {
        self.replicas = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_horizon(mut self, t: f64) -> Self {
        self.horizon = Some(t);
        self
    }

    pub fn with_p_miss(mut self, p: f64) -> Self {
        self.p_miss = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::param("replicas", "must be at least 2"));
        }
        if !(self.p_miss > 0.0 && self.p_miss <= 0.1) {
            return Err(Error::param("p_miss", "must lie in (0, 0.1]"));
        }
        for (name, v) in [
            ("dt_max", self.dt_max),
            ("horizon", self.horizon),
            ("epsilon", self.epsilon),
            ("delta_abs", self.delta_abs),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::param(name, "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn richardson_count(&self) -> usize {
        match self.richardson_replicas {
            Some(m) => m.min(self.replicas),
            None => self.replicas.min((self.replicas / 20).max(200)),
        }
    }
}

/// Which quantity an estimate refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    ExitTime,
    Survival,
    ExitPlaceTail,
    Hitting,
    Dynkin,
}

/// A Monte-Carlo estimate with its uncertainty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimator: Estimator,
    pub mean: f64,
    pub std_error: f64,
    pub replicas: usize,
    pub seed: u64,
    /// Discretization bias band: Richardson difference between `p_miss` and
    /// `p_miss/4` plus the absorption bound.
    pub bias_band: f64,
    pub absorbed: usize,
    pub censored: usize,
    pub delta_abs: f64,
    pub mean_steps: f64,
}

impl McEstimate {
    fn exact(estimator: Estimator, value: f64, seed: u64) -> Self {
        Self {
            estimator,
            mean: value,
            std_error: 0.0,
            replicas: 0,
            seed,
            bias_band: 0.0,
            absorbed: 0,
            censored: 0,
            delta_abs: 0.0,
            mean_steps: 0.0,
        }
    }

    /// `|mean − target| ≤ k·SE + bias band`.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + self.bias_band
    }

    /// Relative width `SE / |mean|`.
    pub fn relative_error(&self) -> f64 {
        self.std_error / self.mean.abs()
    }
}

/// Result of one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    /// Time of the first skeleton point outside `D` (or the horizon).
    pub exit_time: f64,
    pub exit_position: Vec<f64>,
    pub absorbed: bool,
    /// Stopped by the horizon or the step limit while still inside.
    pub censored: bool,
    pub steps: u64,
}

/// Pruitt function in the form used by the step rule.
#[derive(Clone, Debug)]
enum StepRule {
    /// `Σ c_i r^{-p_i}` (Gaussian and stable parts).
    Powers(Vec<(f64, f64)>),
    Table(LogLogTable),
}

impl StepRule {
    fn h(&self, r: f64) -> f64 {
        match self {
            StepRule::Powers(terms) => terms
                .iter()
                .map(|&(c, p)| if p == 2.0 { c / (r * r) } else { c * r.powf(-p) })
                .sum(),
            StepRule::Table(t) => t.eval(r),
        }
    }
}

/// Path simulator for a model in a domain.
#[derive(Clone, Debug)]
pub struct Simulator<'a> {
    model: &'a LevyModel,
    domain: &'a Domain,
    cfg: SimConfig,
    sampler: IncrementSampler,
    rule: StepRule,
    delta_abs: f64,
    renewal: Option<&'a RenewalTable>,
}

impl<'a> Simulator<'a> {
    pub fn new(model: &'a LevyModel, domain: &'a Domain, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        if model.dimension() != domain.dimension() {
            return Err(Error::Precondition("model and domain dimensions differ".into()));
        }
        let scale = domain.scale();
        let delta_abs = cfg.delta_abs.unwrap_or(1e-4 * scale);
        let epsilon = match cfg.epsilon {
            Some(e) => {
                if e < 1e-12 * scale {
                    return Err(Error::param("epsilon", "below the resolution of the jump-radius table"));
                }
                e
            }
            None => default_epsilon(model, scale)?,
        };
        let sampler = IncrementSampler::for_model(model, epsilon)?;
        let s = model.sigma();
        let gauss = (s * s * model.dimension() as f64, 2.0);
        let rule = match &sampler {
            IncrementSampler::Gaussian { .. } => StepRule::Powers(vec![gauss]),
            IncrementSampler::Stable { alpha, .. } => {
                // h of the jump part scales exactly as r^{-α}
                let p = pruitt(model, 1.0)?;
                StepRule::Powers(vec![gauss, (p.k + p.l, *alpha)])
            }
            IncrementSampler::CompoundPoisson { .. } => {
                let hi = if domain.is_bounded() {
                    domain.diameter()
                } else {
                    1e4 * scale
                };
                StepRule::Table(pruitt_table(model, delta_abs / 8.0, hi, 8)?)
            }
        };
        Ok(Self {
            model,
            domain,
            cfg: cfg.clone(),
            sampler,
            rule,
            delta_abs,
            renewal: None,
        })
    }

    /// Uses `table` for the absorption bias bounds instead of the
    /// `1/sqrt(ψ*(1/r))` proxy.
    pub fn with_renewal(mut self, table: &'a RenewalTable) -> Self {
        self.renewal = Some(table);
        self
    }

    pub fn sampler(&self) -> &IncrementSampler {
        &self.sampler
    }

    pub fn delta_abs(&self) -> f64 {
        self.delta_abs
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn v(&self, r: f64) -> f64 {
        match self.renewal {
            Some(t) => t.v(r),
            None => 1.0 / self.model.psi_star(1.0 / r).sqrt(),
        }
    }

    /// RNG for replica `i`.
    pub fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(i as u64);
        rng
    }

    /// Simulates replica `i` from `x` with miss probability `p_miss`.
    pub fn path(&self, x: &[f64], i: usize, p_miss: f64) -> PathOutcome {
        let mut rng = self.rng(i);
        let mut y = x.to_vec();
        let mut inc = vec![0.0; y.len()];
        let horizon = self.cfg.horizon.unwrap_or(f64::INFINITY);
        let dt_max = self.cfg.dt_max.unwrap_or(f64::INFINITY);
        let mut t = 0.0;
        let mut steps = 0u64;
        loop {
            let delta = self.domain.delta(&y);
            if delta <= 0.0 || delta < self.delta_abs {
                return PathOutcome {
                    exit_time: t,
                    exit_position: y,
                    absorbed: delta > 0.0,
                    censored: false,
                    steps,
                };
            }
            if t >= horizon || steps >= self.cfg.max_steps {
                return PathOutcome {
                    exit_time: t,
                    exit_position: y,
                    absorbed: false,
                    censored: true,
                    steps,
                };
            }
            let dt = (p_miss / (24.0 * self.rule.h(0.5 * delta)))
                .min(dt_max)
                .min(horizon - t);
            self.sampler.sample(dt, &mut rng, &mut inc);
            for (a, b) in y.iter_mut().zip(&inc) {
                *a += b;
            }
            t += dt;
            steps += 1;
        }
    }

    /// All replicas at the configured `p_miss`, plus the Richardson subset at
    /// `p_miss / 4`.
    pub fn run<R: Runner>(&self, x: &[f64], runner: &R) -> (Vec<PathOutcome>, Vec<PathOutcome>) {
        let p = self.cfg.p_miss;
        let main = runner.map(self.cfg.replicas, |i| self.path(x, i, p));
        let fine = runner.map(self.cfg.richardson_count(), |i| self.path(x, i, p / 4.0));
        (main, fine)
    }

    fn check_start(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.domain.dimension() {
            return Err(Error::Precondition("start point has the wrong dimension".into()));
        }
        Ok(())
    }

    pub(crate) fn summarize(
        &self,
        estimator: Estimator,
        main: &[PathOutcome],
        fine: &[PathOutcome],
        stat: impl Fn(&PathOutcome) -> f64,
        absorption: f64,
    ) -> McEstimate {
        let (mean, se) = mean_se(main.iter().map(&stat));
        let m = fine.len();
        let band = if m > 0 {
            let coarse = mean_se(main[..m].iter().map(&stat)).0;
            let refined = mean_se(fine.iter().map(&stat)).0;
            // first-order extrapolation of the p_miss → 0 limit
            (coarse - refined).abs() * 4.0 / 3.0
        } else {
            0.0
        };
        let absorbed = main.iter().filter(|p| p.absorbed).count();
        McEstimate {
            estimator,
            mean,
            std_error: se,
            replicas: main.len(),
            seed: self.cfg.seed,
            bias_band: band + absorbed as f64 / main.len() as f64 * absorption,
            absorbed,
            censored: main.iter().filter(|p| p.censored).count(),
            delta_abs: self.delta_abs,
            mean_steps: main.iter().map(|p| p.steps as f64).sum::<f64>() / main.len() as f64,
        }
    }

    /// `E^x τ_D`.
    pub fn exit_time<R: Runner>(&self, x: &[f64], runner: &R) -> Result<McEstimate> {
        self.check_start(x)?;
        if !self.domain.contains(x) {
            return Ok(McEstimate::exact(Estimator::ExitTime, 0.0, self.cfg.seed));
        }
        let (main, fine) = self.run(x, runner);
        // remaining mean exit time from an absorbed state
        let reach = if self.domain.is_bounded() {
            self.domain.diameter()
        } else {
            self.domain.scale()
        };
        let absorption = 2.0 * self.v(self.delta_abs) * self.v(reach);
        let est = self.summarize(Estimator::ExitTime, &main, &fine, |p| p.exit_time, absorption);
        if est.censored > 0 {
            return Err(Error::Degenerate(alloc::format!(
                "{} of {} paths did not exit before the horizon",
                est.censored,
                est.replicas
            )));
        }
        Ok(est)
    }

    /// `P^x(τ_D > t)` for every `t` in `times`, on one shared set of replicas.
    pub fn survival<R: Runner>(&self, x: &[f64], times: &[f64], runner: &R) -> Result<Vec<McEstimate>> {
        self.check_start(x)?;
        if times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::param("t", "must be nonnegative"));
        }
        if let Some(h) = self.cfg.horizon {
            if times.iter().any(|t| *t > h) {
                return Err(Error::Precondition(
                    "survival time beyond the simulation horizon".into(),
                ));
            }
        }
        if !self.domain.contains(x) {
            return Ok(times
                .iter()
                .map(|_| McEstimate::exact(Estimator::Survival, 0.0, self.cfg.seed))
                .collect());
        }
        let mut cfg = self.cfg.clone();
        let t_max = times.iter().cloned().fold(0.0, f64::max);
        cfg.horizon = Some(t_max);
        let sim = Simulator { cfg, ..self.clone() };
        let (main, fine) = sim.run(x, runner);
        Ok(times
            .iter()
            .map(|&t| {
                let absorption = if t > 0.0 {
                    (2.0 * self.v(self.delta_abs) / t.sqrt()).min(1.0)
                } else {
                    0.0
                };
                let survived = move |p: &PathOutcome| if p.censored || p.exit_time > t { 1.0 } else { 0.0 };
                let mut e = sim.summarize(Estimator::Survival, &main, &fine, survived, absorption);
                e.censored = 0;
                e
            })
            .collect())
    }

    /// `P^x(|X_{τ_D}| ≥ r)`; the crossing jump is applied in full.
    pub fn exit_place_tail<R: Runner>(&self, x: &[f64], r: f64, runner: &R) -> Result<McEstimate> {
        self.check_start(x)?;
        if !(r > 0.0) {
            return Err(Error::param("r", "must be positive"));
        }
        if !self.domain.contains(x) {
            let v = if norm(x) >= r { 1.0 } else { 0.0 };
            return Ok(McEstimate::exact(Estimator::ExitPlaceTail, v, self.cfg.seed));
        }
        let (main, fine) = self.run(x, runner);
        let est = self.summarize(
            Estimator::ExitPlaceTail,
            &main,
            &fine,
            |p| if norm(&p.exit_position) >= r { 1.0 } else { 0.0 },
            0.0,
        );
        if est.censored > 0 {
            return Err(Error::Degenerate("paths censored before exiting".into()));
        }
        Ok(est)
    }

    /// `(E^x f(X_τ) − f(x)) / E^x τ` for the domain of this simulator
    /// (normally a small ball around `x`), with a delta-method standard error.
    pub fn dynkin<R: Runner>(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], runner: &R) -> Result<McEstimate> {
        self.dynkin_detailed(f, x, runner).map(|d| d.estimate)
    }

    /// As [`Simulator::dynkin`], also returning the denominator.
    pub fn dynkin_detailed<R: Runner>(
        &self,
        f: &(dyn Fn(&[f64]) -> f64 + Sync),
        x: &[f64],
        runner: &R,
    ) -> Result<DynkinEstimate> {
        self.check_start(x)?;
        if !self.domain.contains(x) {
            return Err(Error::Precondition("Dynkin estimate needs x inside the domain".into()));
        }
        let (main, fine) = self.run(x, runner);
        let fx = f(x);
        let ratio = |paths: &[PathOutcome]| -> (f64, f64) {
            let n = paths.len() as f64;
            let num: Vec<f64> = paths.iter().map(|p| f(&p.exit_position) - fx).collect();
            let den: Vec<f64> = paths.iter().map(|p| p.exit_time).collect();
            let mn = num.iter().sum::<f64>() / n;
            let md = den.iter().sum::<f64>() / n;
            let r = mn / md;
            let mut var = 0.0;
            for (a, b) in num.iter().zip(&den) {
                let z = (a - mn) - r * (b - md);
                var += z * z;
            }
            let se = if n > 1.0 {
                (var / (n - 1.0) / n).sqrt() / md.abs()
            } else {
                f64::INFINITY
            };
            (r, se)
        };
        let (mean, se) = ratio(&main);
        let m = fine.len();
        let band = if m > 0 {
            (ratio(&main[..m]).0 - ratio(&fine).0).abs() * 4.0 / 3.0
        } else {
            0.0
        };
        let (mean_tau, tau_se) = mean_se(main.iter().map(|p| p.exit_time));
        if !(mean_tau > 0.0) {
            return Err(Error::Degenerate("mean exit time of the small ball vanishes".into()));
        }
        let absorbed = main.iter().filter(|p| p.absorbed).count();
        let estimate = McEstimate {
            estimator: Estimator::Dynkin,
            mean,
            std_error: se,
            replicas: main.len(),
            seed: self.cfg.seed,
            bias_band: band,
            absorbed,
            censored: main.iter().filter(|p| p.censored).count(),
            delta_abs: self.delta_abs,
            mean_steps: main.iter().map(|p| p.steps as f64).sum::<f64>() / main.len() as f64,
        };
        Ok(DynkinEstimate {
            estimate,
            exit_time: mean_tau,
            exit_time_se: tau_se,
        })
    }
}

/// Dynkin-operator estimate together with its denominator `E^x τ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynkinEstimate {
    pub estimate: McEstimate,
    pub exit_time: f64,
    pub exit_time_se: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `E^x τ_D`.
pub fn exit_time<R: Runner>(
    model: &LevyModel,
    domain: &Domain,
    x: &[f64],
    cfg: &SimConfig,
    runner: &R,
) -> Result<McEstimate> {
    if x.len() == domain.dimension() && !domain.contains(x) {
        return Ok(McEstimate::exact(Estimator::ExitTime, 0.0, cfg.seed));
    }
    Simulator::new(model, domain, cfg)?.exit_time(x, runner)
}

/// `P^x(τ_D > t)` on a shared set of replicas.
pub fn survival_prob<R: Runner>(
    model: &LevyModel,
    domain: &Domain,
    x: &[f64],
    times: &[f64],
    cfg: &SimConfig,
    runner: &R,
) -> Result<Vec<McEstimate>> {
    Simulator::new(model, domain, cfg)?.survival(x, times, runner)
}

/// `P^x(|X_{τ_D}| ≥ r)`.
pub fn exit_place_tail<R: Runner>(
    model: &LevyModel,
    domain: &Domain,
    x: &[f64],
    r: f64,
    cfg: &SimConfig,
    runner: &R,
) -> Result<McEstimate> {
    Simulator::new(model, domain, cfg)?.exit_place_tail(x, r, runner)
}

/// Probability of entering the closed ball `B̄_R` before the horizon; a
/// lower bound for the probability of ever hitting it.
pub fn hit_ball_prob<R: Runner>(
    model: &LevyModel,
    radius: f64,
    x: &[f64],
    cfg: &SimConfig,
    runner: &R,
) -> Result<McEstimate> {
    if norm(x) <= radius {
        return Err(Error::Precondition("hitting probability needs |x| > R".into()));
    }
    if cfg.horizon.is_none() {
        return Err(Error::Precondition("hitting probability needs a finite horizon".into()));
    }
    let domain = Domain::ball_complement(model.dimension(), radius)?;
    let sim = Simulator::new(model, &domain, cfg)?;
    let (main, fine) = sim.run(x, runner);
    let mut e = sim.summarize(
        Estimator::Hitting,
        &main,
        &fine,
        |p| if p.censored { 0.0 } else { 1.0 },
        0.0,
    );
    e.censored = 0;
    Ok(e)
}

/// `(E^x f(X_{τ_B}) − f(x)) / E^x τ_B` for the ball `B = B(x, t)`.
pub fn dynkin_estimate<R: Runner>(
    model: &LevyModel,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    t_ball_radius: f64,
    cfg: &SimConfig,
    runner: &R,
) -> Result<McEstimate> {
    dynkin_detailed(model, f, x, t_ball_radius, cfg, runner).map(|d| d.estimate)
}

/// As [`dynkin_estimate`], also returning `E^x τ_B` and its standard error.
pub fn dynkin_detailed<R: Runner>(
    model: &LevyModel,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    x: &[f64],
    t_ball_radius: f64,
    cfg: &SimConfig,
    runner: &R,
) -> Result<DynkinEstimate> {
    if !(t_ball_radius > 0.0) {
        return Err(Error::param("t_ball_radius", "must be positive"));
    }
    let ball = Domain::ball_at(x.to_vec(), t_ball_radius)?;
    Simulator::new(model, &ball, cfg)?.dynkin_detailed(f, x, runner)
}
