use std::f64::consts::PI;

use sgn_bench::fit::{default_fit_models, run_fit_suite, FitProtocol};
use sgn_bench::tasks::{task_by_name, task_registry};
use sgn_core::Rng;

/// `J0(z) = (1/pi) int_0^pi cos(z sin t) dt`; the integrand is smooth and
/// periodic, so the midpoint rule converges geometrically.
fn j0_integral(z: f64) -> f64 {
    let n = 600;
    let h = PI / n as f64;
    (0..n).map(|i| (z * ((i as f64 + 0.5) * h).sin()).cos()).sum::<f64>() * h / PI
}

/// Closed form of `sum_{k=1}^{n} sin(k t)`.
fn sine_sum(n: f64, t: f64) -> f64 {
    if t.abs() < 1e-300 {
        return 0.0;
    }
    (n * t / 2.0).sin() * ((n + 1.0) * t / 2.0).sin() / (t / 2.0).sin()
}

fn reference(name: &str, v: &[f64]) -> f64 {
    match name {
        "bessel" => j0_integral(20.0 * v[0]),
        "chaotic" => (PI * v[0]).sin().exp() * (v[1] * v[1]).exp(),
        "simple_product" => ((v[0] + v[1]).powi(2) - (v[0] - v[1]).powi(2)) / 4.0,
        "high_freq_sum" => sine_sum(100.0, v[0] / 100.0),
        "highly_nonlinear" => (v[0].powi(2) + v[1].powi(2)).sin().exp() * (v[2].powi(2) + v[3].powi(2)).sin().exp(),
        "discontinuous" => match v[0] {
            x if x >= 0.5 => 1.0,
            x if x >= 0.0 => (4.0 * PI * x).sin(),
            x if x >= -0.5 => x.powi(2),
            _ => -1.0,
        },
        "oscillating_decay" => (10.0 * PI * v[0]).sin() / (v[0] * v[0]).exp(),
        "rational" => 1.0 - 1.0 / (1.0 + v[0].powi(2) + v[1].powi(2)),
        "multi_scale" => (v[0] * v[1] * v[2]).tanh() + (PI * v[0]).sin() * (PI * v[1]).cos() / (v[2] * v[2]).exp(),
        "exp_sine" => {
            0.5 * ((50.0 * (v[0] + v[1])).sin() + (50.0 * (v[0] - v[1])).sin())
                + (-10.0 * ((v[0] - 0.5).powi(2) + (v[1] - 0.5).powi(2))).exp()
        }
        other => panic!("no reference for {other}"),
    }
}

#[test]
fn registry_matches_independent_formulas() {
    let mut rng = Rng::new(2024);
    let registry = task_registry();
    assert_eq!(registry.len(), 10);
    for task in &registry {
        for _ in 0..100 {
            let x: Vec<f64> = (0..task.arity).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
            let (got, want) = (task.eval(&x), reference(&task.name, &x));
            assert!((got - want).abs() < 1e-12, "{} at {x:?}: {got} vs {want}", task.name);
        }
    }
}

#[test]
fn discontinuous_breakpoints() {
    let t = task_by_name("discontinuous").unwrap();
    assert_eq!(t.eval(&[-1.0]), -1.0);
    assert_eq!(t.eval(&[-0.5]), 0.25);
    assert_eq!(t.eval(&[0.0]), 0.0);
    assert!(t.eval(&[0.25]).abs() < 1e-15);
    assert_eq!(t.eval(&[0.75]), 1.0);
}

#[test]
fn high_freq_sum_slope_at_origin() {
    let t = task_by_name("high_freq_sum").unwrap();
    assert_eq!(t.eval(&[0.0]), 0.0);
    assert!((t.eval(&[1e-6]) - 5.05e-5).abs() < 1e-9);
}

/// Smooth low-frequency target: the spectral branch must not cost accuracy.
/// Measured with the default protocol: SGN about 1.2e-3 to 1.7e-3 and the
/// matched MLP about 2.6e-3 to 3.7e-3.
#[test]
fn simple_product_sgn_within_twice_mlp() {
    let task = task_by_name("simple_product").unwrap();
    let protocol = FitProtocol {
        seeds: vec![0, 1, 2],
        ..FitProtocol::default()
    };
    let report = run_fit_suite(&default_fit_models(), &[task], &protocol).unwrap();
    assert_eq!(report.failures(), 0);
    for seed in 0..3 {
        let rmse = |model: &str| report.row(model, "simple_product", seed).unwrap().min_test_rmse.unwrap();
        let (s, m) = (rmse("sgn"), rmse("mlp_gelu"));
        assert!(s <= 2.0 * m, "seed {seed}: sgn {s:e} vs mlp {m:e}");
    }
}
