//! Run specification files (TOML).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use levy_core::domains::{Domain, DomainSpec};
use levy_core::model::ModelSpec;
use levy_core::verify::{Barrier, DynkinIdentity, SurvivalKind};
use levy_core::{SimConfig, VerifyConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
}

fn invalid(context: impl Into<String>, message: impl ToString) -> SpecError {
    SpecError::Invalid {
        context: context.into(),
        message: message.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Characteristics,
    Renewal,
    Simulate,
    Verify,
    All,
}

/// Logarithmic radius grid for profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 1e-3,
            hi: 1e3,
            per_decade: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedDomain {
    pub name: String,
    #[serde(flatten)]
    pub spec: DomainSpec,
}

/// One Monte-Carlo estimate request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimJob {
    ExitTime {
        domain: String,
        x: Vec<f64>,
        /// Write per-replica exit data to a CSV trace.
        #[serde(default)]
        trace: bool,
    },
    Survival {
        domain: String,
        x: Vec<f64>,
        times: Vec<f64>,
    },
    ExitPlaceTail {
        domain: String,
        x: Vec<f64>,
        r: f64,
    },
    Hitting {
        radius: f64,
        x: Vec<f64>,
    },
}

fn default_radius() -> f64 {
    1.0
}

fn default_delta_over_r() -> Vec<f64> {
    vec![0.9, 0.5, 0.1, 0.02]
}

/// One verification request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckJob {
    ExitBall {
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_delta_over_r")]
        delta_over_r: Vec<f64>,
    },
    ExitC11 {
        domain: String,
        deltas: Vec<f64>,
    },
    Survival {
        setup: SurvivalKind,
        times: Vec<f64>,
    },
    Hitting {
        #[serde(default = "default_radius")]
        radius: f64,
        multiples: Vec<f64>,
    },
    Barriers {
        #[serde(default = "default_radius")]
        radius: f64,
        deltas: Vec<f64>,
        #[serde(default = "default_barrier")]
        barrier: Barrier,
    },
    DynkinIdentity {
        identity: DynkinIdentity,
        deltas: Vec<f64>,
    },
    ExitPlace {
        domain: String,
        x: Vec<f64>,
        radii: Vec<f64>,
    },
}

fn default_barrier() -> Barrier {
    Barrier::Ball
}

fn default_tasks() -> Vec<Task> {
    vec![Task::All]
}

/// A whole study: model, domains, tasks and their parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub model: ModelSpec,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub thresholds: VerifyConfig,
    #[serde(default)]
    pub domains: Vec<NamedDomain>,
    #[serde(default)]
    pub simulate: Vec<SimJob>,
    #[serde(default)]
    pub verify: Vec<CheckJob>,
}

impl RunSpec {
    pub fn from_path(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = Self::from_toml(&text).map_err(|e| match e {
            SpecError::Parse { message, .. } => SpecError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        Ok(spec)
    }

    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        let spec: RunSpec = toml::from_str(text).map_err(|e| SpecError::Parse {
            path: PathBuf::from("<spec>"),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Requested tasks with `all` expanded, in execution order.
    pub fn task_set(&self) -> BTreeSet<Task> {
        let mut set = BTreeSet::new();
        for t in &self.tasks {
            match t {
                Task::All => {
                    set.extend([Task::Characteristics, Task::Renewal, Task::Simulate, Task::Verify]);
                }
                other => {
                    set.insert(*other);
                }
            }
        }
        set
    }

    pub fn domain(&self, name: &str) -> Option<&DomainSpec> {
        self.domains.iter().find(|d| d.name == name).map(|d| &d.spec)
    }

    fn build_domain(&self, context: &str, name: &str) -> Result<Domain, SpecError> {
        let spec = self
            .domain(name)
            .ok_or_else(|| invalid(context, format!("unknown domain `{name}`")))?;
        spec.build(self.model.dimension).map_err(|e| invalid(context, e))
    }

    /// Checks that every task's inputs resolve, without running anything
    /// expensive.
    pub fn validate(&self) -> Result<(), SpecError> {
        let d = self.model.dimension;
        if d == 0 {
            return Err(invalid("model.dimension", "must be positive"));
        }
        if self.tasks.is_empty() {
            return Err(invalid("tasks", "no task requested"));
        }
        let g = &self.grid;
        if !(g.lo > 0.0 && g.hi > g.lo && g.per_decade > 0) {
            return Err(invalid("grid", "need 0 < lo < hi and per_decade > 0"));
        }
        self.sim.validate().map_err(|e| invalid("sim", e))?;
        let mut names = BTreeSet::new();
        for (i, nd) in self.domains.iter().enumerate() {
            let ctx = format!("domains[{i}]");
            if !names.insert(nd.name.as_str()) {
                return Err(invalid(ctx, format!("duplicate domain name `{}`", nd.name)));
            }
            nd.spec.build(d).map_err(|e| invalid(ctx, e))?;
        }
        let point = |ctx: &str, x: &[f64]| -> Result<(), SpecError> {
            if x.len() != d {
                return Err(invalid(
                    ctx,
                    format!("point has {} coordinates, model dimension is {d}", x.len()),
                ));
            }
            Ok(())
        };
        let positive = |ctx: &str, what: &str, v: &[f64]| -> Result<(), SpecError> {
            if v.is_empty() || v.iter().any(|t| !(*t > 0.0)) {
                return Err(invalid(
                    ctx,
                    format!("`{what}` must be a nonempty list of positive values"),
                ));
            }
            Ok(())
        };
        for (i, job) in self.simulate.iter().enumerate() {
            let ctx = format!("simulate[{i}]");
            match job {
                SimJob::ExitTime { domain, x, .. } => {
                    self.build_domain(&ctx, domain)?;
                    point(&ctx, x)?;
                }
                SimJob::Survival { domain, x, times } => {
                    self.build_domain(&ctx, domain)?;
                    point(&ctx, x)?;
                    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0)) {
                        return Err(invalid(ctx, "`times` must be a nonempty list of nonnegative values"));
                    }
                }
                SimJob::ExitPlaceTail { domain, x, r } => {
                    self.build_domain(&ctx, domain)?;
                    point(&ctx, x)?;
                    positive(&ctx, "r", &[*r])?;
                }
                SimJob::Hitting { radius, x } => {
                    point(&ctx, x)?;
                    positive(&ctx, "radius", &[*radius])?;
                    if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= *radius {
                        return Err(invalid(ctx, "hitting needs |x| > radius"));
                    }
                    if self.sim.horizon.is_none() {
                        return Err(invalid(ctx, "hitting needs `sim.horizon`"));
                    }
                }
            }
        }
        for (i, job) in self.verify.iter().enumerate() {
            let ctx = format!("verify[{i}]");
            match job {
                CheckJob::ExitBall { radius, delta_over_r } => {
                    positive(&ctx, "radius", &[*radius])?;
                    positive(&ctx, "delta_over_r", delta_over_r)?;
                    if delta_over_r.iter().any(|q| *q > 1.0) {
                        return Err(invalid(ctx, "`delta_over_r` entries must not exceed 1"));
                    }
                }
                CheckJob::ExitC11 { domain, deltas } => {
                    let dom = self.build_domain(&ctx, domain)?;
                    if !dom.is_bounded() {
                        return Err(invalid(ctx, "needs a bounded domain"));
                    }
                    positive(&ctx, "deltas", deltas)?;
                }
                CheckJob::Survival { setup, times } => {
                    positive(&ctx, "times", times)?;
                    match setup {
                        SurvivalKind::HalfLine { x } => {
                            if d != 1 {
                                return Err(invalid(ctx, "the half-line check is one-dimensional"));
                            }
                            positive(&ctx, "x", &[*x])?;
                        }
                        SurvivalKind::Ball { radius, delta } | SurvivalKind::BallComplement { radius, delta } => {
                            positive(&ctx, "radius", &[*radius])?;
                            positive(&ctx, "delta", &[*delta])?;
                        }
                        SurvivalKind::C11 { domain, delta } => {
                            domain.build(d).map_err(|e| invalid(&ctx, e))?;
                            positive(&ctx, "delta", &[*delta])?;
                        }
                    }
                }
                CheckJob::Hitting { radius, multiples } => {
                    positive(&ctx, "radius", &[*radius])?;
                    if multiples.is_empty() || multiples.iter().any(|m| !(*m > 1.0)) {
                        return Err(invalid(ctx, "`multiples` must exceed 1"));
                    }
                    if self.sim.horizon.is_none() {
                        return Err(invalid(ctx, "hitting needs `sim.horizon`"));
                    }
                }
                CheckJob::Barriers { radius, deltas, .. } => {
                    positive(&ctx, "deltas", deltas)?;
                    if deltas.iter().any(|q| *q >= radius / 4.0) {
                        return Err(invalid(ctx, "`deltas` must lie below radius/4"));
                    }
                }
                CheckJob::DynkinIdentity { deltas, .. } => {
                    positive(&ctx, "deltas", deltas)?;
                }
                CheckJob::ExitPlace { domain, x, radii } => {
                    self.build_domain(&ctx, domain)?;
                    point(&ctx, x)?;
                    positive(&ctx, "radii", radii)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        tasks = ["simulate"]
        [model]
        dimension = 1
        family = "isotropic-stable"
        alpha = 1.0
        [[domains]]
        name = "unit"
        shape = "interval"
        lo = -1.0
        hi = 1.0
        [[simulate]]
        estimator = "exit-time"
        domain = "unit"
        x = [0.0]
    "#;

    #[test]
    fn parses_minimal_spec() {
        let s = RunSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(s.model.dimension, 1);
        assert_eq!(s.task_set().into_iter().collect::<Vec<_>>(), vec![Task::Simulate]);
        assert_eq!(s.sim, SimConfig::default());
    }

    #[test]
    fn missing_dimension_is_reported_with_location() {
        let text = MINIMAL.replace("dimension = 1", "");
        let err = RunSpec::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("dimension"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn unresolved_domain_rejected() {
        let text = MINIMAL.replace("domain = \"unit\"", "domain = \"square\"");
        let err = RunSpec::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("simulate[0]") && err.contains("square"), "{err}");
    }

    #[test]
    fn all_expands_in_dependency_order() {
        let text = MINIMAL.replace("tasks = [\"simulate\"]", "tasks = [\"verify\", \"all\"]");
        let s = RunSpec::from_toml(&text).unwrap();
        assert_eq!(
            s.task_set().into_iter().collect::<Vec<_>>(),
            vec![Task::Characteristics, Task::Renewal, Task::Simulate, Task::Verify]
        );
    }

    #[test]
    fn toml_round_trip() {
        let s = RunSpec::from_toml(MINIMAL).unwrap();
        let back = RunSpec::from_toml(&toml::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
