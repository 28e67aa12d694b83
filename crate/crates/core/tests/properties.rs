use std::sync::OnceLock;

use levy_core::domains::Domain;
use levy_core::model::{catalogue, make_model};
use levy_core::renewal::RenewalTable;
use levy_core::simulate::{exit_time, IncrementSampler, Runner, Sequential, SimConfig};
use levy_core::LevyModel;
use proptest::prelude::*;
use rand::SeedableRng;

fn models() -> &'static [LevyModel] {
    static M: OnceLock<Vec<LevyModel>> = OnceLock::new();
    M.get_or_init(|| catalogue(2).iter().map(|s| s.build().unwrap()).collect())
}

fn tempered_table() -> &'static RenewalTable {
    static T: OnceLock<RenewalTable> = OnceLock::new();
    T.get_or_init(|| {
        let m = make_model("tempered-stable", 2, &[("alpha", 1.0)]).unwrap();
        RenewalTable::build(&m, 1e-4, 1e4, 16).unwrap()
    })
}

/// Executes replicas in reverse order, standing in for a scheduler that
/// finishes them out of order.
struct Reversed;

impl Runner for Reversed {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut v: Vec<T> = (0..n).rev().map(f).collect();
        v.reverse();
        v
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psi_star_sandwich(i in 0usize..10, lu in -3.0f64..3.0) {
        let m = &models()[i];
        let u = 10f64.powf(lu);
        let psi = m.psi(u).unwrap();
        let star = m.psi_star(u);
        prop_assert!(psi <= star * (1.0 + 1e-9));
        prop_assert!(star <= std::f64::consts::PI.powi(2) * psi * (1.0 + 1e-9));
    }

    #[test]
    fn renewal_subadditive(lx in -3.0f64..3.0, ly in -3.0f64..3.0) {
        let t = tempered_table();
        let (x, y) = (10f64.powf(lx), 10f64.powf(ly));
        prop_assert!(t.v(x + y) <= (t.v(x) + t.v(y)) * (1.0 + 1e-6));
        prop_assert!(t.v(x) <= t.v(x + y));
    }

    #[test]
    fn distance_is_lipschitz(
        a in prop::array::uniform3(-3.0f64..3.0),
        b in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let domains = [
            Domain::ball(3, 1.5).unwrap(),
            Domain::ball_complement(3, 1.0).unwrap(),
            Domain::upper_half_space(3).unwrap(),
            Domain::ellipsoid(vec![2.0, 1.0, 0.5]).unwrap(),
        ];
        let dist = a.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        for d in &domains {
            prop_assert!((d.delta(&a) - d.delta(&b)).abs() <= dist + 1e-9, "{}", d.name());
        }
    }
}

#[test]
fn increments_match_characteristic_function() {
    let n = 40_000;
    for i in [1usize, 2, 4, 5, 8] {
        let m = &models()[i];
        let sampler = IncrementSampler::for_model(m, 1e-3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(i as u64);
        let dt = 0.3;
        let mut z = vec![0.0; 2];
        let samples: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                sampler.sample(dt, &mut rng, &mut z);
                [z[0], z[1]]
            })
            .collect();
        for u in [0.3, 1.0, 3.0] {
            let emp = samples.iter().map(|s| (u * s[0]).cos()).sum::<f64>() / n as f64;
            let want = (-dt * m.psi(u).unwrap()).exp();
            assert!(
                (emp - want).abs() <= 4.0 / (n as f64).sqrt() + 1e-6,
                "{} u={u}: {emp} vs {want}",
                m.name()
            );
        }
    }
}

#[test]
fn estimates_independent_of_scheduling() {
    let m = make_model("truncated-stable", 2, &[("alpha", 1.5)]).unwrap();
    let d = Domain::ball(2, 1.0).unwrap();
    let cfg = SimConfig::default().with_replicas(300).with_seed(77);
    let a = exit_time(&m, &d, &[0.3, 0.1], &cfg, &Sequential).unwrap();
    let b = exit_time(&m, &d, &[0.3, 0.1], &cfg, &Reversed).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn exit_time_radially_symmetric() {
    let m = make_model("isotropic-stable", 2, &[("alpha", 1.0)]).unwrap();
    let d = Domain::ball(2, 1.0).unwrap();
    let cfg = SimConfig::default().with_replicas(3000);
    let a = exit_time(&m, &d, &[0.5, 0.0], &cfg, &Sequential).unwrap();
    let b = exit_time(&m, &d, &[0.0, -0.5], &cfg.clone().with_seed(1), &Sequential).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= 3.0 * se + a.bias_band + b.bias_band);
}
