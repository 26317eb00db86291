use inertia_core::fractional::{
    fbm_covariance, fgn_autocovariance, gaussian_from_cov, generate_fbm, simulate_fou, stieltjes_integral, FbmGenerator, FbmPath, GaussianSampler,
};
use inertia_core::rng::stream;
use inertia_core::series::{GridSeries, SeriesRole};
use inertia_core::stats::{ks_two_sample, Moments};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn terminal_moments(gen: &FbmGenerator, paths: usize, seed: u64, idx: &[usize]) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, 0);
    (0..paths)
        .map(|_| {
            let p = gen.sample(&mut rng);
            idx.iter().map(|&k| p.values[k]).collect()
        })
        .collect()
}

#[test]
fn brownian_increments_uncorrelated() {
    let p = generate_fbm(0.5, 1 << 16, 1.0, &mut stream(201, 0)).unwrap();
    let inc = p.increments();
    let m = Moments::from_slice(&inc);
    let n = inc.len();
    let lag1 = (0..n - 1).map(|k| (inc[k] - m.mean) * (inc[k + 1] - m.mean)).sum::<f64>() / (n - 1) as f64;
    assert!((lag1 / m.variance()).abs() < 0.01);
    assert!((m.variance() * n as f64 - 1.0).abs() < 0.02);
}

#[test]
fn fbm_terminal_variance_and_covariance() {
    let h = 0.75;
    let gen = FbmGenerator::new(h, 256, 1.0).unwrap();
    // 4×10^4 paths keep the ±0.03 band at about four standard errors.
    let draws = terminal_moments(&gen, 40_000, 202, &[64, 128, 256]);
    let mean_prod = |a: usize, b: usize| draws.iter().map(|d| d[a] * d[b]).sum::<f64>() / draws.len() as f64;
    let var1 = mean_prod(2, 2);
    assert!((var1 - 1.0).abs() < 0.03, "Var(B_1) = {var1}");
    // Oracle: the covariance formula evaluated directly.
    let formula = |s: f64, t: f64| 0.5 * (s.powf(2.0 * h) + t.powf(2.0 * h) - (t - s).abs().powf(2.0 * h));
    for (k, s) in [(0, 0.25), (1, 0.5)] {
        let oracle = formula(s, 1.0);
        assert!((fbm_covariance(s, 1.0, h).unwrap() - oracle).abs() < 1e-15);
        let cov = mean_prod(k, 2);
        assert!((cov - oracle).abs() < 0.03, "E[B_{s} B_1] = {cov} vs {oracle}");
    }
    assert!((formula(0.5, 1.0) - 0.5).abs() < 1e-15);
}

#[test]
fn stationary_increments_and_self_similarity() {
    let h = 0.7;
    let gen = FbmGenerator::new(h, 512, 1.0).unwrap();
    let draws = terminal_moments(&gen, 10_000, 203, &[0, 64, 128, 192, 256, 320, 512]);
    let var = |f: &dyn Fn(&Vec<f64>) -> f64| draws.iter().map(|d| f(d).powi(2)).sum::<f64>() / draws.len() as f64;
    let lag = 0.125f64.powf(2.0 * h);
    for (a, b) in [(0, 1), (2, 3), (4, 5)] {
        let v = var(&|d| d[b] - d[a]);
        assert!((v / lag - 1.0).abs() < 0.05, "increment {a}->{b}: {v} vs {lag}");
    }
    // Var(B_{ct}) = c^{2H} Var(B_t), c = 4.
    let ratio = var(&|d| d[6]) / var(&|d| d[2]);
    assert!((ratio / 4f64.powf(2.0 * h) - 1.0).abs() < 0.05, "ratio {ratio}");
}

#[test]
fn stieltjes_converges_to_half_square() {
    // Fixed fine paths, coarsened by subsampling.
    let n_fine = 1 << 14;
    let mut rng = stream(204, 0);
    let mut errors = vec![0.0; 5];
    let paths = 20;
    for _ in 0..paths {
        let fine = generate_fbm(0.75, n_fine, 1.0, &mut rng).unwrap().to_series();
        let target = 0.5 * fine.last().powi(2);
        for (i, factor) in [16usize, 8, 4, 2, 1].iter().enumerate() {
            let b = fine.subsample(*factor).unwrap();
            let integral = stieltjes_integral(&b, &b).unwrap();
            errors[i] += (integral.last() - target).abs() / paths as f64;
        }
    }
    for w in errors.windows(2) {
        assert!(w[1] < w[0], "{errors:?}");
    }
    // Error ~ dt^{2H-1}: each halving shrinks it by at least 2^{-(2H-1)} / slack.
    assert!(errors[4] < errors[0] * 0.5, "{errors:?}");
}

#[test]
fn fou_variance_matches_quadrature() {
    let (h, k, n) = (0.75, 2.0, 256);
    let dt = 1.0 / n as f64;
    let drift = GridSeries::constant(dt, n, -k, SeriesRole::Integrand).unwrap();
    let ones = GridSeries::constant(dt, n, 1.0, SeriesRole::Integrand).unwrap();
    // Oracle: Var(Σ_j e^{-k(1-t_j)} ΔB_j) with the exact increment covariance
    // (the Euler scheme's weights are (1 - k dt)^{n-1-j}).
    let w: Vec<f64> = (0..n).map(|j| (1.0 - k * dt).powi((n - 1 - j) as i32)).collect();
    let mut oracle = 0.0;
    for i in 0..n {
        for j in 0..n {
            oracle += w[i] * w[j] * fgn_autocovariance(i.abs_diff(j), h);
        }
    }
    oracle *= dt.powf(2.0 * h);
    let gen = FbmGenerator::new(h, n, 1.0).unwrap();
    let mut rng = stream(205, 0);
    let ends: Vec<f64> = (0..10_000).map(|_| simulate_fou(&drift, &ones, 1.0, &gen.sample(&mut rng)).unwrap().last()).collect();
    let var = Moments::from_slice(&ends).variance();
    assert!((var / oracle - 1.0).abs() < 0.05, "{var} vs {oracle}");
    // Continuous-time value Var(∫ e^{-k(1-u)} dB^H_u) differs from the
    // discrete oracle by the Euler error only.
    assert!(oracle > 0.0 && oracle < 1.0);
}

#[test]
fn fou_with_brownian_driver_is_ou() {
    let (k, sigma, n, horizon) = (4.0, 0.8, 1024, 2.0);
    let dt = horizon / n as f64;
    let drift = GridSeries::constant(dt, n, -k, SeriesRole::Integrand).unwrap();
    let ones = GridSeries::constant(dt, n, 1.0, SeriesRole::Integrand).unwrap();
    let gen = FbmGenerator::new(0.5, n, horizon).unwrap();
    let mut rng = stream(206, 0);
    let ends: Vec<f64> = (0..10_000).map(|_| simulate_fou(&drift, &ones, sigma, &gen.sample(&mut rng)).unwrap().last()).collect();
    let var = Moments::from_slice(&ends).variance();
    let target = sigma * sigma / (2.0 * k) * (1.0 - (-2.0 * k * horizon).exp());
    assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
}

#[test]
fn identity_covariance_gives_standard_normals() {
    let dim = 1000;
    let cov: Vec<Vec<f64>> = (0..dim).map(|i| (0..dim).map(|j| (i == j) as u8 as f64).collect()).collect();
    let sampler = GaussianSampler::new(&cov).unwrap();
    let mut rng = stream(207, 0);
    let mut m = Moments::default();
    for _ in 0..1000 {
        sampler.sample(&mut rng).into_iter().for_each(|v| m.push(v));
    }
    assert!(m.mean.abs() < 0.01);
    assert!((m.variance() - 1.0).abs() < 0.02);
}

#[test]
fn covariance_sampler_agrees_with_circulant_generator() {
    let (h, n) = (0.75, 64);
    let dt = 1.0 / n as f64;
    let cov: Vec<Vec<f64>> = (1..=n)
        .map(|i| (1..=n).map(|j| fbm_covariance(i as f64 * dt, j as f64 * dt, h).unwrap()).collect())
        .collect();
    let mut rng = stream(208, 0);
    let sampler = GaussianSampler::new(&cov).unwrap();
    let a: Vec<f64> = (0..2000).map(|_| sampler.sample(&mut rng)[n - 1]).collect();
    let b: Vec<f64> = (0..2000).map(|_| generate_fbm(h, n, 1.0, &mut rng).unwrap().values[n]).collect();
    let p = ks_two_sample(&a, &b).unwrap().p_value;
    assert!(p > 0.01, "p = {p}");
    let single = gaussian_from_cov(&cov, dt, &mut rng).unwrap();
    assert_eq!(single.len(), n);
}

fn series(values: Vec<f64>, dt: f64) -> GridSeries {
    GridSeries::new(dt, values, SeriesRole::Generic).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_is_psd_on_random_grids(h in 0.05f64..=1.0, times in proptest::collection::vec(0.0f64..10.0, 64)) {
        let m = DMatrix::from_fn(64, 64, |i, j| fbm_covariance(times[i], times[j], h).unwrap());
        prop_assert!((m.clone() - m.transpose()).abs().max() == 0.0);
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        prop_assert!(min >= -1e-8 * m.trace().max(1.0), "min eigenvalue {}", min);
    }

    #[test]
    fn stieltjes_linear_and_additive(
        psi1 in proptest::collection::vec(-2.0f64..2.0, 33),
        psi2 in proptest::collection::vec(-2.0f64..2.0, 33),
        steps in proptest::collection::vec(-1.0f64..1.0, 32),
        a in -3.0f64..3.0,
    ) {
        let dt = 1.0 / 32.0;
        let mut z = vec![0.0];
        for s in &steps {
            z.push(z.last().unwrap() + s);
        }
        let zs = series(z.clone(), dt);
        let i1 = stieltjes_integral(&series(psi1.clone(), dt), &zs).unwrap();
        let i2 = stieltjes_integral(&series(psi2.clone(), dt), &zs).unwrap();
        let comb: Vec<f64> = psi1.iter().zip(&psi2).map(|(x, y)| a * x + y).collect();
        let ic = stieltjes_integral(&series(comb, dt), &zs).unwrap();
        for k in 0..33 {
            prop_assert!((ic.values()[k] - (a * i1.values()[k] + i2.values()[k])).abs() < 1e-10);
        }
        // Additivity: the integral over [0,1] is the one over [0,1/2] plus
        // the one over [1/2,1] against the restarted integrator.
        let z2: Vec<f64> = z[16..].iter().map(|v| v - z[16]).collect();
        let second = stieltjes_integral(&series(psi1[16..].to_vec(), dt), &series(z2, dt)).unwrap();
        prop_assert!((i1.last() - (i1.values()[16] + second.last())).abs() < 1e-10);
    }
}

#[test]
fn fbm_path_invariants() {
    let p: FbmPath = generate_fbm(0.9, 100, 2.0, &mut stream(209, 0)).unwrap();
    assert_eq!(p.values[0], 0.0);
    assert_eq!(p.values.len(), 101);
    assert!((p.grid_step - 0.02).abs() < 1e-15);
}
