//! Orchestration of a run: model, characteristics, renewal, simulation and
//! verification, then the artifacts.

use std::path::{Path, PathBuf};

use anyhow::Context;
use levy_core::characteristics::CharacteristicProfile;
use levy_core::math::log_grid;
use levy_core::renewal::{condition_a_profile, RenewalTable};
use levy_core::simulate::{hit_ball_prob, Simulator};
use levy_core::verify::{
    check_barriers, check_dynkin_identity, check_exit_ball, check_exit_c11, check_exit_place, check_hitting,
    check_survival, points_at_distances, BoundCheck,
};
use levy_core::{LevyModel, McEstimate, SimConfig};
use log::info;

use crate::io::{csv_bytes, write_atomic};
use crate::report::{CheckRecord, RenewalSection, Report, SimRecord, TaskRecord, TaskStatus};
use crate::runner::Parallel;
use crate::spec::{CheckJob, RunSpec, SimJob, Task};

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Worker threads; `0` means one per core.
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

/// Exit status: all tasks ran and no hard assertion failed.
pub const EXIT_OK: i32 = 0;
/// A hard assertion (explicit constant) was violated.
pub const EXIT_HARD_FAILURE: i32 = 1;
/// The spec did not parse or validate; nothing was written.
pub const EXIT_INVALID_SPEC: i32 = 2;
/// Some task failed to run; see the summary.
pub const EXIT_TASK_FAILED: i32 = 3;

const DEFAULT_OUT_DIR: &str = "levy-exit-lab-out";

/// Computes the report without writing anything.
pub fn compute(spec: &RunSpec, opts: &RunOptions) -> anyhow::Result<Report> {
    let seed = opts.seed.or(spec.seed).unwrap_or(spec.sim.seed);
    let sim = SimConfig {
        seed,
        ..spec.sim.clone()
    };
    let model = spec.model.build().context("model")?;
    let runner = Parallel::new(opts.threads).context("thread pool")?;
    let tasks = spec.task_set();
    let mut report = Report {
        model: spec.model.clone(),
        model_name: model.name(),
        seed,
        sim: sim.clone(),
        thresholds: spec.thresholds.clone(),
        tasks: Vec::new(),
        characteristics: None,
        renewal: None,
        simulations: Vec::new(),
        checks: Vec::new(),
    };

    info!("renewal table for {}", model.name());
    let table = RenewalTable::standard(&model);
    let grid = log_grid(spec.grid.lo, spec.grid.hi, spec.grid.per_decade);

    if tasks.contains(&Task::Characteristics) {
        let rec = match &table {
            Ok(t) => match CharacteristicProfile::compute(&model, t, &grid) {
                Ok(p) => {
                    report.characteristics = Some(p);
                    ok(Task::Characteristics)
                }
                Err(e) => failed(Task::Characteristics, e),
            },
            Err(e) => skipped(Task::Characteristics, format!("renewal function unavailable: {e}")),
        };
        report.tasks.push(rec);
    }

    if tasks.contains(&Task::Renewal) {
        let rec = match &table {
            Ok(t) => {
                let radii: Vec<f64> = grid
                    .iter()
                    .copied()
                    .filter(|r| *r > t.x_min() && 5.0 * r <= t.x_max())
                    .collect();
                match condition_a_profile(t, &radii) {
                    Ok(ca) => {
                        report.renewal = Some(RenewalSection {
                            grid: t.grid.clone(),
                            v: t.v.clone(),
                            vprime: t.vprime.clone(),
                            method: t.method.clone(),
                            proxy_count: t.proxy_count(),
                            concave: t.is_concave(1e-6),
                            log_concave: t.is_log_concave(1e-6),
                            condition_a: ca,
                        });
                        ok(Task::Renewal)
                    }
                    Err(e) => failed(Task::Renewal, e),
                }
            }
            Err(e) => failed(Task::Renewal, e),
        };
        report.tasks.push(rec);
    }

    if tasks.contains(&Task::Simulate) {
        let mut any_failed = false;
        for (i, job) in spec.simulate.iter().enumerate() {
            info!("simulate[{i}]");
            let rec = match simulate_job(spec, &model, table.as_ref().ok(), job, &sim, &runner) {
                Ok(estimates) => SimRecord {
                    job: job.clone(),
                    estimates,
                    error: None,
                },
                Err(e) => {
                    any_failed = true;
                    SimRecord {
                        job: job.clone(),
                        estimates: Vec::new(),
                        error: Some(format!("{e:#}")),
                    }
                }
            };
            report.simulations.push(rec);
        }
        report.tasks.push(if any_failed {
            failed(Task::Simulate, "some estimates failed")
        } else {
            ok(Task::Simulate)
        });
    }

    if tasks.contains(&Task::Verify) {
        let rec = match &table {
            Ok(t) => {
                let mut any_failed = false;
                for (i, job) in spec.verify.iter().enumerate() {
                    info!("verify[{i}]");
                    let rec = match verify_job(spec, &model, t, job, &sim, &runner) {
                        Ok(check) => CheckRecord {
                            job: job.clone(),
                            check: Some(check),
                            error: None,
                        },
                        Err(e) => {
                            any_failed = true;
                            CheckRecord {
                                job: job.clone(),
                                check: None,
                                error: Some(format!("{e:#}")),
                            }
                        }
                    };
                    report.checks.push(rec);
                }
                if any_failed {
                    failed(Task::Verify, "some checks could not run")
                } else {
                    ok(Task::Verify)
                }
            }
            Err(e) => skipped(Task::Verify, format!("renewal function unavailable: {e}")),
        };
        report.tasks.push(rec);
    }
    Ok(report)
}

/// Runs the spec and writes `report.json`, `summary.txt` and the CSV tables
/// into the output directory.
pub fn execute(spec: &RunSpec, opts: &RunOptions) -> anyhow::Result<RunOutcome> {
    let report = compute(spec, opts)?;
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| spec.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    write_artifacts(&report, &out_dir)?;
    if spec
        .simulate
        .iter()
        .any(|j| matches!(j, SimJob::ExitTime { trace: true, .. }))
    {
        write_traces(spec, &report, &out_dir, opts)?;
    }
    let exit_code = if report.hard_failures() > 0 {
        EXIT_HARD_FAILURE
    } else if report.any_task_failed() {
        EXIT_TASK_FAILED
    } else {
        EXIT_OK
    };
    Ok(RunOutcome {
        report,
        out_dir,
        exit_code,
    })
}

pub fn write_artifacts(report: &Report, dir: &Path) -> anyhow::Result<()> {
    let put =
        |name: &str, bytes: &[u8]| write_atomic(&dir.join(name), bytes).with_context(|| format!("writing {name}"));
    put("report.json", report.to_json()?.as_bytes())?;
    put("summary.txt", report.summary().as_bytes())?;
    if let Some(b) = report.profile_csv() {
        put("profile.csv", &b?)?;
    }
    if let Some(b) = report.renewal_csv() {
        put("renewal.csv", &b?)?;
    }
    if !report.simulations.is_empty() {
        put("estimates.csv", &report.estimates_csv()?)?;
    }
    if !report.checks.is_empty() {
        put("checks.csv", &report.checks_csv()?)?;
    }
    Ok(())
}

fn write_traces(spec: &RunSpec, report: &Report, dir: &Path, opts: &RunOptions) -> anyhow::Result<()> {
    let model = spec.model.build()?;
    let table = RenewalTable::standard(&model).ok();
    let runner = Parallel::new(opts.threads)?;
    for (i, job) in spec.simulate.iter().enumerate() {
        let SimJob::ExitTime { domain, x, trace: true } = job else {
            continue;
        };
        let dom = spec.domain(domain).expect("validated").build(model.dimension())?;
        let mut sim = Simulator::new(&model, &dom, &report.sim)?;
        if let Some(t) = &table {
            sim = sim.with_renewal(t);
        }
        let (main, _) = sim.run(x, &runner);
        let mut header = vec![
            "replica".to_string(),
            "exit_time".into(),
            "absorbed".into(),
            "censored".into(),
            "steps".into(),
        ];
        header.extend((0..model.dimension()).map(|k| format!("x{k}")));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = main.iter().enumerate().map(|(r, p)| {
            let mut row = vec![
                r.to_string(),
                p.exit_time.to_string(),
                p.absorbed.to_string(),
                p.censored.to_string(),
                p.steps.to_string(),
            ];
            row.extend(p.exit_position.iter().map(|v| v.to_string()));
            row
        });
        write_atomic(&dir.join(format!("trace-simulate-{i}.csv")), &csv_bytes(&header, rows)?)?;
    }
    Ok(())
}

fn ok(task: Task) -> TaskRecord {
    TaskRecord {
        task,
        status: TaskStatus::Ok,
        detail: None,
    }
}

fn failed(task: Task, e: impl std::fmt::Display) -> TaskRecord {
    TaskRecord {
        task,
        status: TaskStatus::Failed,
        detail: Some(e.to_string()),
    }
}

fn skipped(task: Task, why: String) -> TaskRecord {
    TaskRecord {
        task,
        status: TaskStatus::Skipped,
        detail: Some(why),
    }
}

fn with_table<'a>(s: Simulator<'a>, table: Option<&'a RenewalTable>) -> Simulator<'a> {
    match table {
        Some(t) => s.with_renewal(t),
        None => s,
    }
}

fn simulate_job(
    spec: &RunSpec,
    model: &LevyModel,
    table: Option<&RenewalTable>,
    job: &SimJob,
    sim: &SimConfig,
    runner: &Parallel,
) -> anyhow::Result<Vec<McEstimate>> {
    let d = model.dimension();
    let domain = |name: &str| -> anyhow::Result<_> { Ok(spec.domain(name).context("unknown domain")?.build(d)?) };
    Ok(match job {
        SimJob::ExitTime { domain: name, x, .. } => {
            let dom = domain(name)?;
            vec![with_table(Simulator::new(model, &dom, sim)?, table).exit_time(x, runner)?]
        }
        SimJob::Survival { domain: name, x, times } => {
            let dom = domain(name)?;
            with_table(Simulator::new(model, &dom, sim)?, table).survival(x, times, runner)?
        }
        SimJob::ExitPlaceTail { domain: name, x, r } => {
            let dom = domain(name)?;
            vec![with_table(Simulator::new(model, &dom, sim)?, table).exit_place_tail(x, *r, runner)?]
        }
        SimJob::Hitting { radius, x } => vec![hit_ball_prob(model, *radius, x, sim, runner)?],
    })
}

fn verify_job(
    spec: &RunSpec,
    model: &LevyModel,
    table: &RenewalTable,
    job: &CheckJob,
    sim: &SimConfig,
    runner: &Parallel,
) -> anyhow::Result<BoundCheck> {
    let d = model.dimension();
    let cfg = &spec.thresholds;
    let domain = |name: &str| -> anyhow::Result<_> { Ok(spec.domain(name).context("unknown domain")?.build(d)?) };
    Ok(match job {
        CheckJob::ExitBall { radius, delta_over_r } => {
            check_exit_ball(model, table, *radius, delta_over_r, sim, cfg, runner)?
        }
        CheckJob::ExitC11 { domain: name, deltas } => {
            let dom = domain(name)?;
            let points = points_at_distances(&dom, deltas)?;
            check_exit_c11(model, table, &dom, &points, sim, cfg, runner)?
        }
        CheckJob::Survival { setup, times } => check_survival(model, table, setup, times, sim, cfg, runner)?,
        CheckJob::Hitting { radius, multiples } => check_hitting(model, table, *radius, multiples, sim, cfg, runner)?,
        CheckJob::Barriers {
            radius,
            deltas,
            barrier,
        } => check_barriers(model, table, *radius, deltas, *barrier, sim, cfg, runner)?,
        CheckJob::DynkinIdentity { identity, deltas } => {
            check_dynkin_identity(model, table, *identity, deltas, sim, cfg, runner)?
        }
        CheckJob::ExitPlace { domain: name, x, radii } => {
            let dom = domain(name)?;
            check_exit_place(model, &dom, x, radii, sim, cfg, runner)?
        }
    })
}
