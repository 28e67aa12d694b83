//! Acceptance suite. Every criterion prints one `PASS`/`FAIL` line on standard
//! output and then asserts its outcome.

use std::io::Write;
use std::time::Instant;

use levy_core::characteristics::{pruitt_h, scaling_indices};
use levy_core::domains::Domain;
use levy_core::math::gamma;
use levy_core::model::{catalogue, make_model, FamilySpec, ModelSpec};
use levy_core::renewal::{condition_a_profile, kappa, RenewalTable};
use levy_core::simulate::exit_time;
use levy_core::verify::{
    check_barriers, check_dynkin_identity, check_exit_ball, check_exit_place, check_hitting, check_survival, Barrier,
    BoundCheck, DynkinIdentity, SurvivalKind,
};
use levy_core::{LevyModel, SimConfig, Verdict, VerifyConfig};
use levy_exit_lab::{compute, Parallel, RunOptions, RunSpec};

fn outcome(criterion: u32, title: &str, failures: &[String]) {
    let mut out = std::io::stdout().lock();
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "criterion {criterion:>2} {status}: {title}");
    for f in failures {
        let _ = writeln!(out, "    {f}");
    }
    drop(out);
    assert!(failures.is_empty(), "criterion {criterion} failed: {failures:#?}");
}

fn stable(d: usize, alpha: f64) -> LevyModel {
    make_model("isotropic-stable", d, &[("alpha", alpha)]).unwrap()
}

fn runner() -> Parallel {
    Parallel::new(0).unwrap()
}

fn log_points(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let n = ((hi / lo).log10() * per_decade as f64).round() as usize;
    (0..=n).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect()
}

fn describe(c: &BoundCheck) -> String {
    format!(
        "{} on {}: {:?}, ratio [{:.4}, {:.4}], trend {:?}, hard {:?}, notes {:?}",
        c.name, c.model, c.verdict, c.ratio_stats.min, c.ratio_stats.max, c.trend, c.hard, c.notes
    )
}

#[test]
fn criterion_01_kappa_of_power_exponents() {
    let mut bad = Vec::new();
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let m = stable(1, alpha);
        for xi in log_points(1e-3, 1e3, 4) {
            let got = kappa(&m, xi).unwrap();
            let want = xi.powf(alpha / 2.0);
            if !((got / want - 1.0).abs() <= 1e-6) {
                bad.push(format!("alpha {alpha}, xi {xi:.3e}: {got} vs {want}"));
            }
        }
    }
    outcome(1, "ladder-height exponent equals xi^(alpha/2) to 1e-6", &bad);
}

#[test]
fn criterion_02_renewal_function_closed_forms() {
    let mut bad = Vec::new();
    let xs = log_points(1e-2, 1e2, 4);
    let brownian = make_model("brownian", 1, &[]).unwrap();
    let t = RenewalTable::standard(&brownian).unwrap();
    for &x in &xs {
        if !((t.v(x) / x - 1.0).abs() <= 0.01) {
            bad.push(format!("brownian x {x:.3e}: V {}", t.v(x)));
        }
    }
    for alpha in [0.5, 1.0, 1.5] {
        let m = stable(1, alpha);
        let t = RenewalTable::standard(&m).unwrap();
        for &x in &xs {
            let want = x.powf(alpha / 2.0) / gamma(1.0 + alpha / 2.0);
            if !((t.v(x) / want - 1.0).abs() <= 0.01) {
                bad.push(format!("alpha {alpha}, x {x:.3e}: V {} vs {want}", t.v(x)));
            }
        }
        if t.proxy_count() > 0 {
            bad.push(format!(
                "alpha {alpha}: {} points fell back to the proxy",
                t.proxy_count()
            ));
        }
    }
    outcome(
        2,
        "renewal function of Brownian motion and stable processes within 1%",
        &bad,
    );
}

#[test]
fn criterion_03_exact_exit_times() {
    let mut bad = Vec::new();
    let run = runner();

    let brownian = ModelSpec::new(3, FamilySpec::Brownian)
        .with_sigma(std::f64::consts::FRAC_1_SQRT_2)
        .build()
        .unwrap();
    let ball = Domain::ball(3, 1.0).unwrap();
    let cfg = SimConfig::default()
        .with_replicas(100_000)
        .with_p_miss(0.1)
        .with_seed(2024);
    let start = Instant::now();
    let e = exit_time(&brownian, &ball, &[0.0; 3], &cfg, &run).unwrap();
    let secs = start.elapsed().as_secs_f64();
    if !e.agrees_with(1.0 / 3.0, 3.0) {
        bad.push(format!("brownian ball: {e:?} vs 1/3"));
    }
    if secs >= 300.0 {
        bad.push(format!("brownian ball took {secs:.0} s"));
    }
    println!(
        "    brownian ball: {:.5} ± {:.1e} (band {:.1e}) in {secs:.0} s",
        e.mean, e.std_error, e.bias_band
    );

    let cauchy = stable(1, 1.0);
    let interval = Domain::interval(-1.0, 1.0).unwrap();
    for (i, x) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let cfg = SimConfig::default().with_replicas(20_000).with_seed(40 + i as u64);
        let e = exit_time(&cauchy, &interval, &[x], &cfg, &run).unwrap();
        let want = (1.0 - x * x).sqrt();
        if !e.agrees_with(want, 3.0) {
            bad.push(format!("cauchy interval x {x}: {e:?} vs {want}"));
        }
    }
    outcome(3, "exit times of the Brownian ball and the Cauchy interval", &bad);
}

#[test]
fn criterion_04_explicit_constants() {
    let mut bad = Vec::new();
    let pi2 = std::f64::consts::PI.powi(2);
    for d in 1..=3 {
        for spec in catalogue(d) {
            let m = spec.build().unwrap();
            for u in log_points(1e-3, 1e3, 4) {
                let psi = m.psi(u).unwrap();
                let star = m.psi_star(u);
                let slack = 1e-9 * psi;
                if !(psi <= star + slack && star <= pi2 * psi + slack) {
                    bad.push(format!("{} d={d} u={u:.3e}: psi {psi}, psi* {star}", m.name()));
                }
            }
            let table = RenewalTable::standard(&m).unwrap();
            let radii = log_points(1e-2, 1e2, 2);
            for c in condition_a_profile(&table, &radii).unwrap() {
                if c.log_concave && !(c.h_r <= 5.0 + 1e-6) {
                    bad.push(format!("{} d={d}: H_r {} at r {}", m.name(), c.h_r, c.r));
                }
            }
        }
    }

    let run = runner();
    let cfg = VerifyConfig::default();
    for (k, spec) in [
        ModelSpec::new(2, FamilySpec::IsotropicStable { alpha: 1.0 }),
        ModelSpec::new(3, FamilySpec::TemperedStable { alpha: 1.0 }),
        ModelSpec::new(1, FamilySpec::IsotropicStable { alpha: 0.5 }),
    ]
    .into_iter()
    .enumerate()
    {
        let m = spec.build().unwrap();
        let table = RenewalTable::standard(&m).unwrap();
        let sim = SimConfig::default().with_replicas(2000).with_seed(400 + k as u64);
        let c = check_exit_ball(&m, &table, 1.0, &[0.9, 0.5, 0.1], &sim, &cfg, &run).unwrap();
        if c.hard_failure() {
            bad.push(describe(&c));
        }
    }
    for (k, spec) in [
        ModelSpec::new(1, FamilySpec::IsotropicStable { alpha: 1.0 }),
        ModelSpec::new(2, FamilySpec::IsotropicStable { alpha: 1.5 }),
        ModelSpec::new(3, FamilySpec::TemperedStable { alpha: 1.0 }),
    ]
    .into_iter()
    .enumerate()
    {
        let m = spec.build().unwrap();
        let d = m.dimension();
        let domain = Domain::ball(d, 0.5).unwrap();
        let sim = SimConfig::default().with_replicas(4000).with_seed(500 + k as u64);
        let c = check_exit_place(&m, &domain, &vec![0.0; d], &[1.0, 2.0, 4.0, 8.0], &sim, &cfg, &run).unwrap();
        if c.hard_failure() || c.verdict != Verdict::Pass {
            bad.push(describe(&c));
        }
    }
    outcome(
        4,
        "psi* between psi and pi^2 psi, exit-time and exit-place upper bounds, H_r <= 5",
        &bad,
    );
}

#[test]
fn criterion_05_pruitt_renewal_band() {
    let mut bad = Vec::new();
    let grid = log_points(1e-3, 1e3, 4);
    for d in 1..=3 {
        for spec in catalogue(d) {
            let m = spec.build().unwrap();
            let table = RenewalTable::standard(&m).unwrap();
            let vals: Vec<f64> = grid
                .iter()
                .map(|&r| pruitt_h(&m, r).unwrap() * table.v(r).powi(2))
                .collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(0.0, f64::max);
            let limit = if matches!(spec.family, FamilySpec::IsotropicStable { .. } | FamilySpec::Brownian) {
                1.02
            } else {
                1e2
            };
            if !(hi / lo <= limit) {
                bad.push(format!("{} d={d}: max/min {:.4} above {limit}", m.name(), hi / lo));
            }
        }
    }
    outcome(5, "h V^2 bounded on [1e-3, 1e3], constant for stable models", &bad);
}

#[test]
fn criterion_06_scaling_recovery() {
    let mut bad = Vec::new();
    for alpha in [0.5, 1.0, 1.3, 1.8] {
        let s = scaling_indices(&stable(2, alpha), 1e-2, 1e4).unwrap();
        match (s.wlsc, s.wusc) {
            (Some(lo), Some(hi)) => {
                if !((lo.index - alpha).abs() <= 0.01 && (hi.index - alpha).abs() <= 0.01) {
                    bad.push(format!("alpha {alpha}: indices {} and {}", lo.index, hi.index));
                }
                if !((lo.constant - 1.0).abs() <= 0.02 && (hi.constant - 1.0).abs() <= 0.02) {
                    bad.push(format!("alpha {alpha}: constants {} and {}", lo.constant, hi.constant));
                }
            }
            other => bad.push(format!("alpha {alpha}: missing scaling {other:?}")),
        }
    }
    // upper scaling needs an index below 2, so u^2 only has the lower one
    let s = scaling_indices(&stable(2, 2.0), 1e-2, 1e4).unwrap();
    match (s.wlsc, s.wusc) {
        (Some(lo), None) if (lo.index - 2.0).abs() <= 0.01 && (lo.constant - 1.0).abs() <= 0.02 => {}
        other => bad.push(format!("alpha 2: {other:?}")),
    }
    outcome(6, "scaling indices and constants of power exponents", &bad);
}

#[test]
fn criterion_07_half_line_survival() {
    let mut bad = Vec::new();
    let run = runner();
    let cfg = VerifyConfig::default();

    let brownian = make_model("brownian", 1, &[]).unwrap();
    let table = RenewalTable::standard(&brownian).unwrap();
    let mut pairs = 0;
    for (k, x) in [0.1, 0.5, 1.0].into_iter().enumerate() {
        let sim = SimConfig::default()
            .with_replicas(4000)
            .with_p_miss(0.1)
            .with_seed(700 + k as u64);
        let c = check_survival(
            &brownian,
            &table,
            &SurvivalKind::HalfLine { x },
            &[0.1, 1.0, 10.0],
            &sim,
            &cfg,
            &run,
        )
        .unwrap();
        let oracle = c.oracle.clone().unwrap_or_default();
        for (e, want) in c.observed.iter().zip(&oracle) {
            pairs += 1;
            if !e.agrees_with(*want, 3.0) {
                bad.push(format!("brownian x {x}: {e:?} vs {want}"));
            }
        }
    }
    if pairs != 9 {
        bad.push(format!("{pairs} reflection pairs instead of 9"));
    }

    let cauchy = stable(1, 1.0);
    let table = RenewalTable::standard(&cauchy).unwrap();
    let sim = SimConfig::default().with_replicas(8000).with_seed(710);
    let times = log_points(0.1, 1e3, 1);
    let c = check_survival(
        &cauchy,
        &table,
        &SurvivalKind::HalfLine { x: 1.0 },
        &times,
        &sim,
        &cfg,
        &run,
    )
    .unwrap();
    println!("    {}", describe(&c));
    if c.verdict != Verdict::Pass {
        bad.push(describe(&c));
    }
    outcome(
        7,
        "half-line survival: reflection oracle and Cauchy comparability",
        &bad,
    );
}

#[test]
fn criterion_08_exit_time_comparability() {
    let mut bad = Vec::new();
    let run = runner();
    let cfg = VerifyConfig {
        ceiling: 1e2,
        ..VerifyConfig::default()
    };
    let grid = [0.02, 0.05, 0.1, 0.2, 0.5, 0.9];
    for (k, spec) in [
        ModelSpec::new(3, FamilySpec::TemperedStable { alpha: 1.0 }),
        ModelSpec::new(
            3,
            FamilySpec::TruncatedStable {
                alpha: 1.0,
                radius: 1.0,
            },
        ),
    ]
    .into_iter()
    .enumerate()
    {
        let m = spec.build().unwrap();
        let table = RenewalTable::standard(&m).unwrap();
        let sim = SimConfig::default().with_replicas(3000).with_seed(800 + k as u64);
        let c = check_exit_ball(&m, &table, 1.0, &grid, &sim, &cfg, &run).unwrap();
        println!("    {}", describe(&c));
        if c.verdict != Verdict::Pass {
            bad.push(describe(&c));
        }
    }
    outcome(
        8,
        "exit-time comparability for tempered and truncated stable in d = 3",
        &bad,
    );
}

#[test]
fn criterion_09_barriers_and_generator_identities() {
    let mut bad = Vec::new();
    let run = runner();
    let cfg = VerifyConfig::default();
    let deltas = [0.05, 0.1, 0.2];
    for (k, alpha) in [0.5, 1.0, 1.5].into_iter().enumerate() {
        let m = stable(2, alpha);
        let table = RenewalTable::standard(&m).unwrap();
        let sim = SimConfig::default().with_replicas(4000).with_seed(900 + 10 * k as u64);
        let c = check_barriers(&m, &table, 1.0, &deltas, Barrier::Ball, &sim, &cfg, &run).unwrap();
        let upper = c.empirical_constants.get("upper").copied();
        if c.verdict != Verdict::Pass || !upper.is_some_and(f64::is_finite) {
            bad.push(describe(&c));
        }
        for (j, identity) in [DynkinIdentity::HalfSpaceHarmonic, DynkinIdentity::MeanExitTime]
            .into_iter()
            .enumerate()
        {
            let sim = sim.clone().with_seed(901 + 10 * k as u64 + j as u64);
            let c = check_dynkin_identity(&m, &table, identity, &deltas, &sim, &cfg, &run).unwrap();
            if c.verdict != Verdict::Pass {
                bad.push(describe(&c));
            }
        }
    }
    outcome(
        9,
        "barrier sign and generator identities for stable processes in d = 2",
        &bad,
    );
}

#[test]
fn criterion_10_hitting() {
    let mut bad = Vec::new();
    let run = runner();
    let cfg = VerifyConfig::default();

    let brownian = make_model("brownian", 3, &[]).unwrap();
    let table = RenewalTable::standard(&brownian).unwrap();
    let sim = SimConfig::default()
        .with_replicas(4000)
        .with_p_miss(0.1)
        .with_horizon(100.0)
        .with_seed(1000);
    let c = check_hitting(&brownian, &table, 1.0, &[2.0, 4.0], &sim, &cfg, &run).unwrap();
    println!("    {}", describe(&c));
    if c.verdict != Verdict::Pass || c.oracle.is_none() {
        bad.push(describe(&c));
    }
    for (e, n) in c.observed.iter().zip(&c.grid) {
        let limit = 1.0 / n;
        let finite = libm::erfc((n - 1.0) / (2.0 * 100f64.sqrt()));
        let correction = limit * (1.0 - finite);
        if !((e.mean - limit).abs() <= 3.0 * e.std_error + e.bias_band + correction) {
            bad.push(format!(
                "|x| {n}: {} vs R/|x| {limit} (horizon correction {correction:.3e})",
                e.mean
            ));
        }
    }

    let m = stable(3, 1.0);
    let table = RenewalTable::standard(&m).unwrap();
    let sim = SimConfig::default()
        .with_replicas(4000)
        .with_horizon(1e3)
        .with_seed(1010);
    let c = check_hitting(&m, &table, 1.0, &[1.5, 2.0, 4.0, 8.0], &sim, &cfg, &run).unwrap();
    println!("    {}", describe(&c));
    if c.hard_failure() || !c.empirical_constants.contains_key("escape_multiple") {
        bad.push(describe(&c));
    }
    outcome(
        10,
        "Brownian hitting probabilities and a finite escape radius for Cauchy in d = 3",
        &bad,
    );
}

#[test]
fn criterion_11_thread_count_does_not_change_reports() {
    let spec = RunSpec::from_toml(
        r#"
tasks = ["all"]
seed = 99

[model]
dimension = 2
family = "isotropic-stable"
alpha = 1.5

[grid]
lo = 0.01
hi = 100.0
per_decade = 2

[sim]
replicas = 1500

[[domains]]
name = "ball"
shape = "ball"
radius = 1.0

[[simulate]]
estimator = "exit-time"
domain = "ball"
x = [0.3, 0.0]

[[simulate]]
estimator = "survival"
domain = "ball"
x = [0.0, 0.0]
times = [0.1, 0.5]

[[verify]]
check = "exit-ball"
delta_over_r = [0.5, 0.1]
"#,
    )
    .unwrap();
    let json = |threads| {
        let opts = RunOptions {
            threads,
            ..Default::default()
        };
        compute(&spec, &opts).unwrap().to_json().unwrap()
    };
    let one = json(1);
    let eight = json(8);
    let bad = if one == eight {
        Vec::new()
    } else {
        vec!["reports differ between 1 and 8 threads".to_string()]
    };
    outcome(11, "byte-identical reports with 1 and 8 worker threads", &bad);
}
