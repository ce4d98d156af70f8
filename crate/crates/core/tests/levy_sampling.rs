use trv_core::harness::{ks_statistic_against, ks_two_sample};
use trv_core::levy::{
    sample_cgmy_increment, sample_levy_path, sample_stable_increment, small_jump_variance, CgmySampler, GridSpec,
    LevyJumpSpec, StableParams,
};
use trv_core::oracle::{density_fft, CharExponentSpec};
use trv_core::rng::stream;

fn base_spec() -> LevyJumpSpec {
    LevyJumpSpec::cgmy(0.028, 2.318, 4.025, 1.25).unwrap()
}

/// Trapezoid rule in `t = ln x` for `∫_0^tau x^{1-Y} e^{-r x} dx`, with the
/// analytic power-law piece below the grid.
fn log_trapezoid_side(y: f64, r: f64, tau: f64) -> f64 {
    let lo = tau * 1e-14;
    let n = 400_000;
    let (a, b) = (lo.ln(), tau.ln());
    let dt = (b - a) / n as f64;
    let g = |t: f64| {
        let x = t.exp();
        x.powf(2.0 - y) * (-r * x).exp()
    };
    let mut s = 0.5 * (g(a) + g(b));
    for i in 1..n {
        s += g(a + i as f64 * dt);
    }
    // Below `lo` the exponential factor is 1 to within r*lo.
    s * dt + lo.powf(2.0 - y) / (2.0 - y)
}

#[test]
fn small_jump_variance_matches_log_grid_trapezoid() {
    let spec = base_spec();
    let tau = 0.01;
    let oracle = spec.c_plus * log_trapezoid_side(1.25, spec.m_temper, tau)
        + spec.c_minus * log_trapezoid_side(1.25, spec.g_temper, tau);
    let v = small_jump_variance(&spec, tau).unwrap();
    assert!((v / oracle - 1.0).abs() < 1e-8, "{v} vs {oracle}");
    // Arbitrary-precision reference for the same integral.
    assert!((v / 0.002_329_418_275_265_804_3 - 1.0).abs() < 1e-10);
}

#[test]
fn small_jump_variance_is_continuous_in_tau() {
    let spec = base_spec();
    let t = 3e-3;
    let a = small_jump_variance(&spec, t).unwrap();
    let b = small_jump_variance(&spec, t * (1.0 + 1e-9)).unwrap();
    assert!(b >= a && (b / a - 1.0) < 1e-8);
}

fn stable_cdf(params: &StableParams, h: f64) -> impl Fn(f64) -> f64 {
    let spec = CharExponentSpec::from_stable(params, 0.0).unwrap();
    let scale = spec.scale(h);
    let table = density_fft(&spec, h, 4000.0 * scale, 1 << 20).unwrap();
    let cdf = table.cdf_table();
    move |x| cdf.cdf(x)
}

#[test]
fn stable_sampler_matches_fourier_cdf() {
    let p = StableParams::new(1.25, 0.3, 1.0, 0.0).unwrap();
    let cdf = stable_cdf(&p, 1.0);
    let mut rng = stream(21, 0);
    let xs: Vec<f64> = (0..100_000).map(|_| sample_stable_increment(&p, 1.0, &mut rng).unwrap()).collect();
    let d = ks_statistic_against(&xs, cdf).unwrap();
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn stable_sampler_scales_with_time() {
    // S_h has the law of h^{1/alpha} S_1.
    let p = StableParams::new(1.5, -0.4, 0.8, 0.0).unwrap();
    let h = 1e-3;
    let cdf = stable_cdf(&p, h);
    let mut rng = stream(22, 0);
    let xs: Vec<f64> = (0..50_000).map(|_| sample_stable_increment(&p, h, &mut rng).unwrap()).collect();
    let d = ks_statistic_against(&xs, cdf).unwrap();
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn symmetric_cgmy_increments_have_zero_mean() {
    let spec = LevyJumpSpec::cgmy(0.5, 3.0, 3.0, 1.5).unwrap();
    let h = 1e-3;
    let sampler = CgmySampler::new(&spec, 3e-3).unwrap();
    let mut rng = stream(23, 0);
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| sampler.sample_increment(h, &mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    assert!(mean.abs() < 3.0 * sd / (n as f64).sqrt(), "mean {mean}, sd {sd}");
}

#[test]
fn symmetric_cgmy_signs_are_balanced() {
    let spec = LevyJumpSpec::cgmy(0.5, 3.0, 3.0, 1.5).unwrap();
    let grid = GridSpec::new(1.0, 100_000).unwrap();
    let xs = sample_levy_path(&spec, &grid, 1e-4, &mut stream(24, 0)).unwrap();
    let pos = xs.iter().filter(|x| **x > 0.0).count() as f64;
    let n = xs.len() as f64;
    // Normal approximation to the two-sided binomial test; |z| < 3.29 is p > 0.001.
    let z = (pos - 0.5 * n) / (0.25 * n).sqrt();
    assert!(z.abs() < 3.29, "z = {z}");
}

#[test]
fn pure_stable_cgmy_matches_stable_law() {
    let spec = LevyJumpSpec::new(0.5, 0.5, 0.0, 0.0, 1.5).unwrap();
    let h: f64 = 1e-4;
    let params = spec.stable_params().unwrap();
    let cdf = stable_cdf(&params, 1.0);
    let sampler = CgmySampler::new(&spec, h).unwrap();
    let mut rng = stream(25, 0);
    let norm = h.powf(1.0 / 1.5);
    let xs: Vec<f64> = (0..100_000).map(|_| sampler.sample_increment(h, &mut rng) / norm).collect();
    let d = ks_statistic_against(&xs, cdf).unwrap();
    assert!(d < 0.01, "KS distance {d}");
}

#[test]
fn free_function_matches_sampler() {
    let spec = base_spec();
    let a = sample_cgmy_increment(&spec, 1e-3, 1e-3, &mut stream(26, 1)).unwrap();
    let b = CgmySampler::new(&spec, 1e-3).unwrap().sample_increment(1e-3, &mut stream(26, 1));
    assert_eq!(a, b);
    assert!(sample_cgmy_increment(&spec, 0.0, 1e-3, &mut stream(26, 1)).is_err());
    assert!(sample_cgmy_increment(&spec, 1e-3, 0.0, &mut stream(26, 1)).is_err());
}

#[test]
fn truncated_second_moment_matches_oracle() {
    use trv_core::oracle::{truncated_moment_numeric, OracleModel};
    // Untempered spec so the Fourier oracle describes the same law.
    let spec = LevyJumpSpec::new(0.5, 0.5, 0.0, 0.0, 1.5).unwrap();
    let h: f64 = 1e-4;
    let eps = h.powf(5.0 / 12.0);
    let sampler = CgmySampler::new(&spec, eps / 100.0).unwrap();
    let mut rng = stream(27, 0);
    let n = 1_000_000;
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let x = sampler.sample_increment(h, &mut rng);
            if x.abs() <= eps {
                x * x
            } else {
                0.0
            }
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / n as f64;
    let se = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt();
    let model = OracleModel { c_plus: 0.5, c_minus: 0.5, y: 1.5, sigma: 0.0 };
    let exact = truncated_moment_numeric(&model.char_spec().unwrap(), 1, eps, h).unwrap();
    assert!((mean - exact).abs() < 3.0 * se, "MC {mean} ± {se}, oracle {exact}");
}

#[test]
fn path_increments_are_uncorrelated() {
    let spec = base_spec();
    let grid = GridSpec::new(1.0, 100_000).unwrap();
    let xs = sample_levy_path(&spec, &grid, 1e-4, &mut stream(28, 0)).unwrap();
    assert_eq!(xs.len(), 100_000);
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    let cov: f64 = xs.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    let r = cov / var;
    assert!(r.abs() < 3.0 / n.sqrt(), "lag-1 autocorrelation {r}");
}

#[test]
fn path_sum_matches_single_increment_variance() {
    let spec = LevyJumpSpec::cgmy(1.0, 3.0, 3.0, 1.5).unwrap();
    let grid = GridSpec::new(1.0, 100).unwrap();
    let paths = 10_000;
    let sampler = CgmySampler::new(&spec, 1e-2).unwrap();
    let sums: Vec<f64> = (0..paths).map(|i| sampler.sample_path(&grid, &mut stream(29, i)).iter().sum()).collect();
    let mut rng = stream(30, 0);
    let singles: Vec<f64> = (0..paths).map(|_| sampler.sample_increment(1.0, &mut rng)).collect();
    let var = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    };
    let (a, b) = (var(&sums), var(&singles));
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
    // Exact variance C Γ(2-Y) (M^{Y-2} + G^{Y-2}) = 2 Γ(1/2) / √3.
    let exact = 2.0 * std::f64::consts::PI.sqrt() / 3f64.sqrt();
    assert!((a / exact - 1.0).abs() < 0.05, "{a} vs exact {exact}");
}

#[test]
fn infinitely_divisible_sums() {
    let spec = LevyJumpSpec::cgmy(0.3, 2.0, 5.0, 1.35).unwrap();
    let h = 1e-3;
    let k = 4;
    let sampler = CgmySampler::new(&spec, 1e-3).unwrap();
    let mut rng = stream(31, 0);
    let sums: Vec<f64> = (0..100_000).map(|_| (0..k).map(|_| sampler.sample_increment(h, &mut rng)).sum()).collect();
    let mut rng = stream(31, 1);
    let single: Vec<f64> = (0..100_000).map(|_| sampler.sample_increment(k as f64 * h, &mut rng)).collect();
    let d = ks_two_sample(&sums, &single).unwrap();
    assert!(d < 0.02, "two-sample KS {d}");
}

#[test]
fn paths_are_reproducible() {
    let spec = base_spec();
    let grid = GridSpec::new(1.0, 5_000).unwrap();
    let a = sample_levy_path(&spec, &grid, 1e-4, &mut stream(32, 9)).unwrap();
    let b = sample_levy_path(&spec, &grid, 1e-4, &mut stream(32, 9)).unwrap();
    let c = sample_levy_path(&spec, &grid, 1e-4, &mut stream(32, 10)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
