// SPDX-License-Identifier: Apache-2.0

use atpg_learn::svr::{Kernel, KernelChoice, Svr, SvrConfig};
use atpg_learn::Regressor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recovers the coefficient of every training row (zero for non-support
/// rows).
fn coefficients(model: &Svr, x: &[Vec<f64>]) -> Vec<f64> {
    x.iter()
        .map(|xi| {
            model
                .support()
                .iter()
                .zip(model.dual())
                .filter(|(sv, _)| *sv == xi)
                .map(|(_, d)| *d)
                .sum()
        })
        .collect()
}

/// Largest violation of the epsilon-SVR optimality conditions, checked from
/// the residuals `z - f(x)` of the trained model.
fn kkt_residual(model: &Svr, x: &[Vec<f64>], z: &[f64]) -> f64 {
    let (c, eps) = (model.c(), model.epsilon());
    let beta = coefficients(model, x);
    let mut worst: f64 = 0.0;
    for ((xi, zi), b) in x.iter().zip(z).zip(beta) {
        let r = zi - model.raw(xi).unwrap();
        let v = if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if b >= c {
            (eps - r).max(0.0)
        } else if b <= -c {
            (r + eps).max(0.0)
        } else if b > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(v);
    }
    worst
}

fn data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen()).collect())
        .collect();
    let z = x
        .iter()
        .map(|r| (r[0] * 3.0).sin() * 0.4 + 0.5 + rng.gen_range(-0.05..0.05))
        .collect();
    (x, z)
}

#[test]
fn fits_a_line() {
    let x: Vec<Vec<f64>> = (0..21).map(|i| vec![i as f64 / 20.0]).collect();
    let z: Vec<f64> = x.iter().map(|r| r[0]).collect();
    let cfg = SvrConfig {
        c: 1e4,
        epsilon: 0.0,
        kernel: KernelChoice::Linear,
        ..SvrConfig::default()
    };
    let (m, fit) = Svr::train(&x, &z, &cfg, 0).unwrap();
    assert!(fit.kkt_gap <= 1e-3);
    for (xi, zi) in x.iter().zip(&z) {
        assert!((m.raw(xi).unwrap() - zi).abs() < 1e-2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dual_is_feasible_and_optimal(
        seed in any::<u64>(),
        n in 5usize..80,
        log_c in -3.0f64..4.0,
        linear in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, z) = data(&mut rng, n, 4);
        let c = 10f64.powf(log_c);
        let cfg = SvrConfig {
            c,
            kernel: if linear { KernelChoice::Linear } else { KernelChoice::Rbf(None) },
            ..SvrConfig::default()
        };
        let (m, fit) = Svr::train(&x, &z, &cfg, seed).unwrap();
        prop_assert!(fit.kkt_gap <= 1e-3);
        prop_assert!(kkt_residual(&m, &x, &z) <= 1e-3);
        let sum: f64 = m.dual().iter().sum();
        prop_assert!(sum.abs() <= 1e-9 * c.max(1.0) * n as f64, "sum of duals {sum}");
        prop_assert!(m.dual().iter().all(|d| d.abs() <= c));
        for xi in &x {
            let p = m.predict(xi).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }
    }
}

#[test]
fn default_gamma_uses_pooled_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, z) = data(&mut rng, 30, 17);
    let (m, _) = Svr::train(&x, &z, &SvrConfig::default(), 0).unwrap();
    let all: Vec<f64> = x.iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
    let Kernel::Rbf { gamma } = m.kernel() else {
        panic!("expected rbf")
    };
    assert!((gamma - 1.0 / (17.0 * var)).abs() < 1e-12);
}

#[test]
fn round_trip_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, z) = data(&mut rng, 60, 17);
    let cfg = SvrConfig {
        max_samples: Some(40),
        ..SvrConfig::default()
    };
    let (a, fit) = Svr::train(&x, &z, &cfg, 9).unwrap();
    let (b, _) = Svr::train(&x, &z, &cfg, 9).unwrap();
    assert_eq!(fit.rows.len(), 40);
    assert_eq!(a, b);
    let back = Svr::from_text(&a.to_text()).unwrap();
    for xi in &x {
        assert_eq!(
            a.raw(xi).unwrap().to_bits(),
            back.raw(xi).unwrap().to_bits()
        );
    }
}

#[test]
fn small_cache_gives_same_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, z) = data(&mut rng, 50, 3);
    let (a, _) = Svr::train(&x, &z, &SvrConfig::default(), 0).unwrap();
    let tiny = SvrConfig {
        cache_bytes: 0,
        ..SvrConfig::default()
    };
    let (b, _) = Svr::train(&x, &z, &tiny, 0).unwrap();
    assert_eq!(a, b);
}
