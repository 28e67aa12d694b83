use levy_core::characteristics::{pruitt_h, scaling_indices};
use levy_core::domains::Domain;
use levy_core::math::gamma;
use levy_core::model::make_model;
use levy_core::renewal::{kappa, RenewalTable};
use levy_core::simulate::{exit_time, survival_prob, Sequential, SimConfig};

fn stable(d: usize, alpha: f64) -> levy_core::LevyModel {
    make_model("isotropic-stable", d, &[("alpha", alpha)]).unwrap()
}

#[test]
fn kappa_of_power_exponent() {
    for alpha in [0.5, 1.0, 1.5, 2.0] {
        let m = stable(1, alpha);
        for xi in [1e-3f64, 0.2, 1.0, 7.0, 1e3] {
            let want = xi.powf(alpha / 2.0);
            assert!(
                (kappa(&m, xi).unwrap() / want - 1.0).abs() < 1e-6,
                "alpha={alpha} xi={xi}"
            );
        }
    }
}

#[test]
fn renewal_function_of_stable() {
    for alpha in [0.5, 1.0, 1.5] {
        let m = stable(2, alpha);
        let t = RenewalTable::build(&m, 1e-3, 1e3, 12).unwrap();
        for x in [1e-2f64, 0.3, 1.0, 40.0, 1e2] {
            let want = x.powf(alpha / 2.0) / gamma(1.0 + alpha / 2.0);
            assert!((t.v(x) / want - 1.0).abs() < 0.01, "alpha={alpha} x={x}");
        }
    }
}

#[test]
fn cauchy_pruitt_function() {
    let m = stable(1, 1.0);
    let h = pruitt_h(&m, 1.0).unwrap();
    assert!((h - 4.0 / std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn scaling_of_power_exponent() {
    let m = stable(2, 1.3);
    let s = scaling_indices(&m, 1e-2, 1e4).unwrap();
    let lo = s.wlsc.unwrap();
    let hi = s.wusc.unwrap();
    assert!((lo.index - 1.3).abs() < 0.01 && (hi.index - 1.3).abs() < 0.01);
    assert!((lo.constant - 1.0).abs() < 0.02 && (hi.constant - 1.0).abs() < 0.02);
}

#[test]
fn cauchy_interval_exit_time() {
    let m = stable(1, 1.0);
    let d = Domain::interval(-1.0, 1.0).unwrap();
    let cfg = SimConfig::default().with_replicas(4000).with_seed(3);
    let e = exit_time(&m, &d, &[0.5], &cfg, &Sequential).unwrap();
    assert!(e.agrees_with(0.75f64.sqrt(), 3.0), "{e:?}");
}

#[test]
fn brownian_half_line_reflection() {
    let m = make_model("brownian", 1, &[]).unwrap();
    let d = Domain::half_line();
    let cfg = SimConfig::default().with_replicas(3000).with_p_miss(0.1).with_seed(1);
    let times = [0.05, 0.25, 1.0];
    let s = survival_prob(&m, &d, &[0.5], &times, &cfg, &Sequential).unwrap();
    for (e, t) in s.iter().zip(times) {
        let want = libm::erf(0.5 / (2.0 * t.sqrt()));
        assert!(e.agrees_with(want, 3.0), "t={t} {e:?} want {want}");
    }
}
