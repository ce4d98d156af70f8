use trv_core::levy::GridSpec;
use trv_core::rng::stream;
use trv_core::sv::{simulate_path, true_iv, DiffusionSpec, ModelSpec};

fn constant(sigma: f64) -> ModelSpec {
    ModelSpec::new(DiffusionSpec::Constant { sigma }, None)
}

fn heston(xi: f64, rho: f64) -> ModelSpec {
    ModelSpec::new(DiffusionSpec::heston_stationary(5.0, xi, 0.16, rho), None)
}

#[test]
fn realized_variance_of_brownian_motion() {
    let grid = GridSpec::new(1.0, 252 * 390).unwrap();
    let m = constant(0.2);
    let rv: Vec<f64> = (0..100)
        .map(|i| {
            let p = simulate_path(&m, &grid, 252, 1, 1e-3, &mut stream(11, i)).unwrap();
            p.increments.iter().map(|d| d * d).sum()
        })
        .collect();
    let n = rv.len() as f64;
    let mean = rv.iter().sum::<f64>() / n;
    let sd = (rv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 0.04).abs() < 3.0 * sd / n.sqrt(), "{mean} ± {}", sd / n.sqrt());
}

#[test]
fn stationary_heston_mean_integrated_variance() {
    // Ten-minute grid: the stationary mean does not depend on the sampling.
    let grid = GridSpec::new(1.0, 252 * 39).unwrap();
    let m = heston(0.5, -0.5);
    let iv: Vec<f64> =
        (0..1000).map(|i| simulate_path(&m, &grid, 252, 10, 1e-3, &mut stream(12, i)).unwrap().total_iv()).collect();
    let n = iv.len() as f64;
    let mean = iv.iter().sum::<f64>() / n;
    let se = (iv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt();
    assert!((mean - 0.16).abs() < 3.0 * se, "{mean} ± {se}");
}

#[test]
fn constant_vol_true_iv_per_block() {
    let grid = GridSpec::new(2.0, 600).unwrap();
    let p = simulate_path(&constant(0.3), &grid, 5, 1, 1e-3, &mut stream(13, 0)).unwrap();
    for b in 0..5 {
        assert!((true_iv(&p, b).unwrap() - 0.09 * 2.0 / 5.0).abs() < 1e-15);
    }
    assert!(true_iv(&p, 5).is_err());
}

#[test]
fn deterministic_variance_closed_form() {
    let (kappa, theta, v0) = (3.0, 0.09, 0.25);
    let m = ModelSpec::new(DiffusionSpec::Heston { kappa, xi: 0.0, theta, rho: 0.3, v0 }, None);
    let grid = GridSpec::new(0.5, 126 * 390).unwrap();
    let p = simulate_path(&m, &grid, 126, 50, 1e-3, &mut stream(14, 0)).unwrap();
    let integral = |t: f64| theta * t + (v0 - theta) * (1.0 - (-kappa * t).exp()) / kappa;
    for b in 0..126 {
        let (t0, t1) = (0.5 * b as f64 / 126.0, 0.5 * (b + 1) as f64 / 126.0);
        let exact = integral(t1) - integral(t0);
        assert!((true_iv(&p, b).unwrap() / exact - 1.0).abs() < 1e-6);
    }
    let total: f64 = p.block_iv.iter().sum();
    assert!((total - p.total_iv()).abs() < 1e-12);
}

/// Lag-one correlation between returns and the change in per-step
/// integrated variance around them.
fn return_variance_correlation(rho: f64) -> (f64, usize) {
    let n = 100_000;
    let grid = GridSpec::new(1.0, n).unwrap();
    let p = simulate_path(&heston(0.5, rho), &grid, n, 1, 1e-3, &mut stream(15, 0)).unwrap();
    let x: Vec<f64> = p.increments[1..n - 1].to_vec();
    let dv: Vec<f64> = (1..n - 1).map(|i| p.block_iv[i + 1] - p.block_iv[i - 1]).collect();
    let m = x.len() as f64;
    let (mx, mv) = (x.iter().sum::<f64>() / m, dv.iter().sum::<f64>() / m);
    let cov: f64 = x.iter().zip(&dv).map(|(a, b)| (a - mx) * (b - mv)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vv: f64 = dv.iter().map(|b| (b - mv).powi(2)).sum();
    (cov / (vx * vv).sqrt(), x.len())
}

#[test]
fn independent_drivers_are_uncorrelated() {
    let (r, n) = return_variance_correlation(0.0);
    assert!(r.abs() < 3.0 / (n as f64).sqrt(), "correlation {r}");
    // The same statistic detects leverage when it is present.
    let (r, _) = return_variance_correlation(-0.5);
    assert!(r < -0.2, "correlation {r}");
}

#[test]
fn variance_never_negative_in_integrated_variance() {
    // Feller condition badly violated so the Euler state goes negative.
    let m = ModelSpec::new(DiffusionSpec::Heston { kappa: 1.0, xi: 2.0, theta: 0.02, rho: -0.9, v0: 0.02 }, None);
    let grid = GridSpec::new(1.0, 252 * 39).unwrap();
    for i in 0..20 {
        let p = simulate_path(&m, &grid, 252, 2, 1e-3, &mut stream(16, i)).unwrap();
        assert!(p.block_iv.iter().all(|v| *v >= 0.0));
        assert!(p.increments.iter().all(|d| d.is_finite()));
    }
}

#[test]
fn substep_refinement_changes_iv_little() {
    // One trading day at one-minute sampling.
    let grid = GridSpec::new(1.0 / 252.0, 390).unwrap();
    let m = heston(0.5, -0.5);
    let mean_iv = |sub: usize, seed: u64| {
        let paths = 4000;
        (0..paths)
            .map(|i| simulate_path(&m, &grid, 1, sub, 1e-3, &mut stream(seed, i)).unwrap().total_iv())
            .sum::<f64>()
            / paths as f64
    };
    let (a, b) = (mean_iv(10, 17), mean_iv(50, 18));
    assert!((a / b - 1.0).abs() < 0.005, "{a} vs {b}");
}
