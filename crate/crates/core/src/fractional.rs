//! Fractional Brownian motion and pathwise integration against it.
//!
//! Paths are generated exactly on a uniform grid by circulant embedding of
//! the fractional Gaussian noise autocovariance, falling back to a Cholesky
//! factorization of the increment covariance when the embedding is not
//! numerically nonnegative. Integrals against `B^H` (`H > 1/2`) are
//! left-endpoint Stieltjes sums.

use std::sync::Arc;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::series::{GridSeries, SeriesRole};

const EMBEDDING_EIGEN_TOL: f64 = -1e-9;
const MAX_CHOLESKY_FALLBACK: usize = 1 << 14;
const COV_JITTER: f64 = 1e-10;
const INDEFINITE_REL_TOL: f64 = 1e-6;

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            quantity: "Hurst index H",
            value: hurst,
            domain: "(0, 1]",
        })
    }
}

/// `E[B^H_s B^H_t] = ½(|t|^{2H} + |s|^{2H} - |t-s|^{2H})`.
pub fn fbm_covariance(s: f64, t: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    let h2 = 2.0 * hurst;
    Ok(0.5 * (t.abs().powf(h2) + s.abs().powf(h2) - (t - s).abs().powf(h2)))
}

/// Autocovariance at lag `k` of unit-step fractional Gaussian noise.
pub fn fgn_autocovariance(k: usize, hurst: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// `B^H` on `t_k = k * grid_step`, `k = 0..=n`, with `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    pub hurst: f64,
    pub grid_step: f64,
    pub values: Vec<f64>,
}

impl FbmPath {
    pub fn to_series(&self) -> GridSeries {
        GridSeries::new(self.grid_step, self.values.clone(), SeriesRole::Integrand).expect("valid by construction")
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

enum FgnMethod {
    Circulant {
        sqrt_eigen: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky(GaussianSampler),
}

/// Reusable fBm sampler for a fixed `(H, n, horizon)`.
pub struct FbmGenerator {
    hurst: f64,
    n: usize,
    grid_step: f64,
    method: FgnMethod,
}

impl FbmGenerator {
    pub fn new(hurst: f64, n: usize, horizon: f64) -> Result<Self> {
        check_hurst(hurst)?;
        if n < 2 {
            return Err(Error::Argument(format!("need at least 2 grid steps, got {n}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain {
                quantity: "horizon",
                value: horizon,
                domain: "(0, ∞)",
            });
        }
        let grid_step = horizon / n as f64;
        let m = 2 * n;
        let mut row: Vec<Complex64> = (0..m)
            .map(|k| {
                let lag = if k <= n { k } else { m - k };
                Complex64::new(fgn_autocovariance(lag, hurst), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let min_eigen = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);

        let method = if min_eigen >= EMBEDDING_EIGEN_TOL {
            let scale = 1.0 / m as f64;
            FgnMethod::Circulant {
                sqrt_eigen: row.iter().map(|c| (c.re.max(0.0) * scale).sqrt()).collect(),
                fft,
            }
        } else {
            if n > MAX_CHOLESKY_FALLBACK {
                return Err(Error::Numeric {
                    iterations: 0,
                    reason: format!(
                        "circulant embedding has eigenvalue {min_eigen:e} and n = {n} exceeds the Cholesky fallback limit {MAX_CHOLESKY_FALLBACK}"
                    ),
                });
            }
            warn!("circulant embedding not nonnegative (min eigenvalue {min_eigen:e}); using O(n^3) Cholesky for n = {n}");
            let cov: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| fgn_autocovariance(i.abs_diff(j), hurst)).collect())
                .collect();
            FgnMethod::Cholesky(GaussianSampler::new(&cov)?)
        };
        Ok(Self {
            hurst,
            n,
            grid_step,
            method,
        })
    }

    pub fn uses_circulant(&self) -> bool {
        matches!(self.method, FgnMethod::Circulant { .. })
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    /// Fractional Gaussian noise: the `n` increments of one path.
    pub fn sample_increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let scale = self.grid_step.powf(self.hurst);
        let unit = match &self.method {
            FgnMethod::Circulant { sqrt_eigen, fft } => {
                let mut w: Vec<Complex64> = sqrt_eigen
                    .iter()
                    .map(|&s| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w.truncate(self.n);
                w.into_iter().map(|c| c.re).collect::<Vec<f64>>()
            }
            FgnMethod::Cholesky(sampler) => sampler.sample(rng),
        };
        unit.into_iter().map(|v| v * scale).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmPath {
        let mut values = Vec::with_capacity(self.n + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for d in self.sample_increments(rng) {
            acc += d;
            values.push(acc);
        }
        FbmPath {
            hurst: self.hurst,
            grid_step: self.grid_step,
            values,
        }
    }
}

/// One exact fBm path with `n` steps on `[0, horizon]`.
pub fn generate_fbm<R: Rng + ?Sized>(hurst: f64, n: usize, horizon: f64, rng: &mut R) -> Result<FbmPath> {
    Ok(FbmGenerator::new(hurst, n, horizon)?.sample(rng))
}

/// `I_k = Σ_{j<k} ψ_j (Z_{j+1} - Z_j)`.
pub fn stieltjes_integral(psi: &GridSeries, integrator: &GridSeries) -> Result<GridSeries> {
    psi.check_same_grid(integrator)?;
    let z = integrator.values();
    if z[0] != 0.0 {
        return Err(Error::invariant("integrator starts at 0", format!("Z_0 = {}", z[0])));
    }
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(z.len());
    out.push(0.0);
    for (j, w) in z.windows(2).enumerate() {
        acc += psi.values()[j] * (w[1] - w[0]);
        out.push(acc);
    }
    GridSeries::new(psi.grid_step(), out, SeriesRole::Integrand)
}

/// Explicit Euler for `dẐ = a(t) Ẑ dt + σ g(t) dB^H`, `Ẑ_0 = 0`.
pub fn simulate_fou(drift_coeff: &GridSeries, diffusion_coeff: &GridSeries, sigma: f64, fbm: &FbmPath) -> Result<GridSeries> {
    let driver = fbm.to_series();
    drift_coeff.check_same_grid(&driver)?;
    diffusion_coeff.check_same_grid(&driver)?;
    let dt = driver.grid_step();
    let a = drift_coeff.values();
    let g = diffusion_coeff.values();
    let b = &fbm.values;
    let mut z = Vec::with_capacity(b.len());
    z.push(0.0);
    for k in 0..b.len() - 1 {
        let prev = z[k];
        z.push(prev + a[k] * prev * dt + sigma * g[k] * (b[k + 1] - b[k]));
    }
    GridSeries::new(dt, z, SeriesRole::Fluctuation)
}

/// `Var(Σ_j w_j ΔB^H_j)` for increments on a grid of step `grid_step`.
pub fn weighted_increment_variance(weights: &[f64], hurst: f64, grid_step: f64) -> f64 {
    let n = weights.len();
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, hurst)).collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += gamma[i.abs_diff(j)] * weights[j];
        }
        total += weights[i] * row;
    }
    total * grid_step.powf(2.0 * hurst)
}

enum Factor {
    Zero,
    Dense(DMatrix<f64>),
}

/// Centered Gaussian vectors with a fixed covariance.
pub struct GaussianSampler {
    dim: usize,
    factor: Factor,
}

impl GaussianSampler {
    /// Cholesky factorization, retried with a small diagonal jitter, then a
    /// clipped eigendecomposition for semidefinite input. Matrices with an
    /// eigenvalue below `-1e-6 * trace` are rejected.
    pub fn new(cov: &[Vec<f64>]) -> Result<Self> {
        let dim = cov.len();
        if dim == 0 || cov.iter().any(|r| r.len() != dim) {
            return Err(Error::invariant("covariance square", format!("{dim} rows with ragged lengths")));
        }
        let scale = cov.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if !scale.is_finite() {
            return Err(Error::invariant("covariance finite", "non-finite entry"));
        }
        for i in 0..dim {
            for j in 0..i {
                if (cov[i][j] - cov[j][i]).abs() > 1e-10 * scale.max(1e-300) {
                    return Err(Error::invariant(
                        "covariance symmetric",
                        format!("entry ({i},{j}) = {} vs ({j},{i}) = {}", cov[i][j], cov[j][i]),
                    ));
                }
            }
        }
        if scale == 0.0 {
            return Ok(Self { dim, factor: Factor::Zero });
        }
        let sym = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (cov[i][j] + cov[j][i]));

        if let Some(ch) = sym.clone().cholesky() {
            return Ok(Self {
                dim,
                factor: Factor::Dense(ch.unpack()),
            });
        }
        let mean_diag = sym.diagonal().mean().max(f64::MIN_POSITIVE);
        let mut jittered = sym.clone();
        for i in 0..dim {
            jittered[(i, i)] += COV_JITTER * mean_diag;
        }
        if let Some(ch) = jittered.cholesky() {
            return Ok(Self {
                dim,
                factor: Factor::Dense(ch.unpack()),
            });
        }

        let trace = sym.trace();
        let eig = SymmetricEigen::new(sym);
        let min_eig = eig.eigenvalues.min();
        if min_eig < -INDEFINITE_REL_TOL * trace.abs() {
            return Err(Error::invariant(
                "covariance positive semidefinite",
                format!("eigenvalue {min_eig:e} below -1e-6 * trace ({trace:e})"),
            ));
        }
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
        Ok(Self {
            dim,
            factor: Factor::Dense(factor),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.factor {
            Factor::Zero => vec![0.0; self.dim],
            Factor::Dense(l) => {
                let z = DVector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                (l * z).iter().copied().collect()
            }
        }
    }
}

/// One centered Gaussian vector with covariance `cov`, laid out on a grid.
pub fn gaussian_from_cov<R: Rng + ?Sized>(cov: &[Vec<f64>], grid_step: f64, rng: &mut R) -> Result<GridSeries> {
    let sampler = GaussianSampler::new(cov)?;
    GridSeries::new(grid_step, sampler.sample(rng), SeriesRole::Generic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn covariance_closed_forms() {
        for h in [0.1, 0.5, 0.75, 1.0] {
            assert!((fbm_covariance(1.0, 1.0, h).unwrap() - 1.0).abs() < 1e-15);
        }
        let v = fbm_covariance(1.0, 2.0, 0.75).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
        for (s, t) in [(0.3, 0.9), (2.0, 0.5), (1.5, 1.5)] {
            assert!((fbm_covariance(s, t, 0.5).unwrap() - f64::min(s, t)).abs() < 1e-12);
        }
        assert!(fbm_covariance(1.0, 1.0, 0.0).is_err());
        assert!(fbm_covariance(1.0, 1.0, 1.2).is_err());
    }

    #[test]
    fn path_starts_at_zero_with_expected_length() {
        let p = generate_fbm(0.75, 16, 1.0, &mut stream(1, 0)).unwrap();
        assert_eq!(p.values.len(), 17);
        assert_eq!(p.values[0], 0.0);
        assert!((p.grid_step - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn embedding_is_used_for_standard_cases() {
        for h in [0.3, 0.5, 0.75, 0.9, 1.0] {
            assert!(FbmGenerator::new(h, 256, 1.0).unwrap().uses_circulant(), "H = {h}");
        }
    }

    #[test]
    fn h_one_is_a_random_line() {
        let p = generate_fbm(1.0, 8, 1.0, &mut stream(2, 0)).unwrap();
        let slope = p.values[8];
        for (k, v) in p.values.iter().enumerate() {
            assert!((v - slope * k as f64 / 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_integrand_reproduces_integrator() {
        let z = generate_fbm(0.75, 64, 1.0, &mut stream(3, 0)).unwrap().to_series();
        let one = GridSeries::constant(z.grid_step(), 64, 1.0, SeriesRole::Integrand).unwrap();
        let i = stieltjes_integral(&one, &z).unwrap();
        for (a, b) in i.values().iter().zip(z.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn step_integrand_against_ramp() {
        let n = 1000;
        let dt = 1.0 / n as f64;
        let psi = GridSeries::from_fn(dt, n, SeriesRole::Integrand, |t| if t < 0.5 - 1e-12 { 1.0 } else { 2.0 }).unwrap();
        let ramp = GridSeries::from_fn(dt, n, SeriesRole::Generic, |t| t).unwrap();
        let i = stieltjes_integral(&psi, &ramp).unwrap();
        assert!((i.last() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn integral_rejects_mismatch() {
        let a = GridSeries::constant(0.1, 10, 1.0, SeriesRole::Generic).unwrap();
        let b = GridSeries::constant(0.1, 11, 0.0, SeriesRole::Generic).unwrap();
        assert!(matches!(stieltjes_integral(&a, &b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn fou_degenerate_cases() {
        let b = generate_fbm(0.7, 128, 1.0, &mut stream(4, 0)).unwrap();
        let dt = b.grid_step;
        let zero = GridSeries::constant(dt, 128, 0.0, SeriesRole::Generic).unwrap();
        let one = GridSeries::constant(dt, 128, 1.0, SeriesRole::Generic).unwrap();
        let z = simulate_fou(&zero, &one, 1.0, &b).unwrap();
        assert_eq!(z.values(), b.values.as_slice());
        let z0 = simulate_fou(&one, &one, 0.0, &b).unwrap();
        assert!(z0.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_covariance_gives_zero_path() {
        let cov = vec![vec![0.0; 5]; 5];
        let s = gaussian_from_cov(&cov, 0.1, &mut stream(5, 0)).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn semidefinite_and_indefinite_covariances() {
        // Rank one: v v^T. The diagonal jitter leaves noise of order 1e-5.
        let v = [1.0, 2.0, -1.0];
        let cov: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let s = GaussianSampler::new(&cov).unwrap().sample(&mut stream(6, 0));
        assert!((s[1] - 2.0 * s[0]).abs() < 1e-4 && (s[2] + s[0]).abs() < 1e-4);

        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(
            GaussianSampler::new(&bad),
            Err(Error::Invariant { name: "covariance positive semidefinite", .. })
        ));
        let asym = vec![vec![1.0, 0.5], vec![0.2, 1.0]];
        assert!(GaussianSampler::new(&asym).is_err());
    }

    #[test]
    fn weighted_variance_matches_covariance() {
        // Unit weights: Var(B_1) = 1.
        let v = weighted_increment_variance(&[1.0; 64], 0.8, 1.0 / 64.0);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
