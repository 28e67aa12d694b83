//! Report structures and their CSV and text renderings.

use std::fmt::Write as _;

use levy_core::characteristics::CharacteristicProfile;
use levy_core::model::ModelSpec;
use levy_core::renewal::{ConditionA, VMethod};
use levy_core::verify::BoundCheck;
use levy_core::{McEstimate, SimConfig, VerifyConfig};
use serde::{Deserialize, Serialize};

use crate::io::csv_bytes;
use crate::spec::{CheckJob, SimJob, Task};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Ok,
    Failed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: Task,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalSection {
    pub grid: Vec<f64>,
    pub v: Vec<f64>,
    pub vprime: Vec<f64>,
    pub method: Vec<VMethod>,
    pub proxy_count: usize,
    pub concave: bool,
    pub log_concave: bool,
    pub condition_a: Vec<ConditionA>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub job: SimJob,
    pub estimates: Vec<McEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub job: CheckJob,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<BoundCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Everything a run produces; serialized as `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: ModelSpec,
    pub model_name: String,
    pub seed: u64,
    pub sim: SimConfig,
    pub thresholds: VerifyConfig,
    pub tasks: Vec<TaskRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub characteristics: Option<CharacteristicProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renewal: Option<RenewalSection>,
    #[serde(default)]
    pub simulations: Vec<SimRecord>,
    #[serde(default)]
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn hard_failures(&self) -> usize {
        self.checks
            .iter()
            .filter_map(|c| c.check.as_ref())
            .filter(|c| c.hard_failure())
            .count()
    }

    pub fn any_task_failed(&self) -> bool {
        self.tasks.iter().any(|t| t.status == TaskStatus::Failed)
    }

    pub fn profile_csv(&self) -> Option<csv::Result<Vec<u8>>> {
        let p = self.characteristics.as_ref()?;
        let hv2 = p.h_v_squared();
        let rows = (0..p.grid.len()).map(|i| {
            [
                p.grid[i],
                p.k[i],
                p.l[i],
                p.h[i],
                p.h1[i],
                p.psi_inv[i],
                p.psi_star_inv[i],
                p.v[i],
                hv2[i],
                p.script_i[i],
                p.script_j[i],
            ]
            .map(|v| v.to_string())
        });
        Some(csv_bytes(
            &[
                "r",
                "K",
                "L",
                "h",
                "h1",
                "psi_inv",
                "psi_star_inv",
                "V",
                "h_V2",
                "I",
                "J",
            ],
            rows,
        ))
    }

    pub fn renewal_csv(&self) -> Option<csv::Result<Vec<u8>>> {
        let r = self.renewal.as_ref()?;
        let rows = (0..r.grid.len()).map(|i| {
            vec![
                r.grid[i].to_string(),
                r.v[i].to_string(),
                r.vprime[i].to_string(),
                format!("{:?}", r.method[i]).to_lowercase(),
            ]
        });
        Some(csv_bytes(&["x", "V", "V_prime", "method"], rows))
    }

    pub fn estimates_csv(&self) -> csv::Result<Vec<u8>> {
        let mut rows = Vec::new();
        for (i, s) in self.simulations.iter().enumerate() {
            for e in &s.estimates {
                rows.push(vec![
                    i.to_string(),
                    serde_json::to_value(e.estimator)
                        .map(|v| v.as_str().unwrap_or("").to_string())
                        .unwrap_or_default(),
                    e.mean.to_string(),
                    e.std_error.to_string(),
                    e.bias_band.to_string(),
                    e.replicas.to_string(),
                    e.seed.to_string(),
                    e.absorbed.to_string(),
                    e.delta_abs.to_string(),
                ]);
            }
        }
        csv_bytes(
            &[
                "job",
                "estimator",
                "mean",
                "std_error",
                "bias_band",
                "replicas",
                "seed",
                "absorbed",
                "delta_abs",
            ],
            rows,
        )
    }

    pub fn checks_csv(&self) -> csv::Result<Vec<u8>> {
        let mut rows = Vec::new();
        for (i, c) in self.checks.iter().enumerate() {
            match &c.check {
                Some(b) => {
                    for (j, x) in b.grid.iter().enumerate() {
                        rows.push(vec![
                            i.to_string(),
                            b.name.clone(),
                            b.grid_label.clone(),
                            x.to_string(),
                            b.observed[j].mean.to_string(),
                            b.observed[j].std_error.to_string(),
                            b.lhs[j].to_string(),
                            b.rhs[j].to_string(),
                            b.ratio[j].to_string(),
                            verdict_name(b),
                        ]);
                    }
                }
                None => rows.push(vec![
                    i.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    "error".into(),
                ]),
            }
        }
        csv_bytes(
            &[
                "check",
                "name",
                "grid",
                "x",
                "observed",
                "std_error",
                "lhs",
                "rhs",
                "ratio",
                "verdict",
            ],
            rows,
        )
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {} (d = {})", self.model_name, self.model.dimension);
        let _ = writeln!(s, "seed: {}", self.seed);
        for t in &self.tasks {
            let _ = write!(s, "task {:?}: {:?}", t.task, t.status);
            if let Some(d) = &t.detail {
                let _ = write!(s, " ({d})");
            }
            s.push('\n');
        }
        if let Some(p) = &self.characteristics {
            let hv2 = p.h_v_squared();
            let (lo, hi) = hv2
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
            let _ = writeln!(
                s,
                "h V^2 range on the grid: [{lo:.4e}, {hi:.4e}], max/min {:.3}",
                hi / lo
            );
            if let Some(sc) = &p.scaling {
                if let Some(w) = sc.wlsc {
                    let _ = writeln!(
                        s,
                        "lower scaling: index {:.4}, constant {:.4}, theta {}",
                        w.index, w.constant, w.theta
                    );
                }
                if let Some(w) = sc.wusc {
                    let _ = writeln!(
                        s,
                        "upper scaling: index {:.4}, constant {:.4}, theta {}",
                        w.index, w.constant, w.theta
                    );
                }
            }
        }
        if let Some(r) = &self.renewal {
            let _ = writeln!(
                s,
                "renewal: {} points, {} proxy, concave {}, log-concave {}",
                r.grid.len(),
                r.proxy_count,
                r.concave,
                r.log_concave
            );
            if let Some(c) = r.condition_a.last() {
                let _ = writeln!(s, "H_r at r = {}: {:.4}", c.r, c.h_r);
            }
        }
        for (i, rec) in self.simulations.iter().enumerate() {
            if let Some(e) = &rec.error {
                let _ = writeln!(s, "simulate[{i}]: error: {e}");
            }
            for e in &rec.estimates {
                let _ = writeln!(
                    s,
                    "simulate[{i}] {:?}: {:.6} ± {:.2e} (bias band {:.2e}, n = {})",
                    e.estimator, e.mean, e.std_error, e.bias_band, e.replicas
                );
            }
        }
        for (i, rec) in self.checks.iter().enumerate() {
            match (&rec.check, &rec.error) {
                (Some(c), _) => {
                    let _ = write!(s, "verify[{i}] {} on {}: {}", c.name, c.domain, verdict_name(c));
                    for h in &c.hard {
                        let _ = write!(s, "; {} {}", h.name, if h.holds { "holds" } else { "VIOLATED" });
                    }
                    for (k, v) in &c.empirical_constants {
                        let _ = write!(s, "; {k} = {v:.4}");
                    }
                    for n in &c.notes {
                        let _ = write!(s, "; {n}");
                    }
                    s.push('\n');
                }
                (None, Some(e)) => {
                    let _ = writeln!(s, "verify[{i}]: error: {e}");
                }
                (None, None) => {}
            }
        }
        s
    }
}

fn verdict_name(c: &BoundCheck) -> String {
    serde_json::to_value(c.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
