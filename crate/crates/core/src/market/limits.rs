//! Second-order and fractional limit objects of the market models.
//!
//! `X` carries the randomness of order timing, `Y` the randomness of agent
//! moods, and `Z` solves `Z_t = ∫ λ̄′(s_u) Z_u du + Y_t + X_t`. Under inertia
//! the rescaled fluctuations behave like a fractional OU process whose
//! constant `σ` is matched empirically.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{simulate_fou, weighted_increment_variance, FbmGenerator, GaussianSampler};
use crate::semi_markov::{SemiMarkovSpec, SojournLaw};
use crate::series::{GridSeries, SeriesRole};

use super::fluid::FluidSolution;
use super::no_feedback::simulate_no_feedback_mapped;
use super::rates::RateSpec;

/// Fewer Monte Carlo paths than this make `γ` too noisy to factorize.
pub const MIN_GAMMA_PATHS: usize = 100;

/// `T^{1-H} √N (path - reference)`, slowly varying factor fixed at 1.
pub fn rescaled_fluctuation(path: &GridSeries, reference: &GridSeries, n_agents: usize, time_scale: f64, hurst: f64) -> Result<GridSeries> {
    let scale = time_scale.powf(1.0 - hurst) * (n_agents as f64).sqrt();
    Ok(path
        .zip_with(reference, |a, b| scale * (a - b))?
        .with_role(SeriesRole::Fluctuation))
}

fn clock_increments(rates: &GridSeries) -> Vec<f64> {
    let dt = rates.grid_step();
    rates.values().windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).collect()
}

fn time_changed_bm<R: Rng + ?Sized>(plus: &[f64], minus: &[f64], rng: &mut R) -> Vec<f64> {
    let mut x = Vec::with_capacity(plus.len() + 1);
    let mut acc = 0.0;
    x.push(0.0);
    for (dp, dm) in plus.iter().zip(minus) {
        let zp: f64 = StandardNormal.sample(rng);
        let zm: f64 = StandardNormal.sample(rng);
        acc += dp.max(0.0).sqrt() * zp - dm.max(0.0).sqrt() * zm;
        x.push(acc);
    }
    x
}

/// `X_t = B+(∫λ̄+(s_u)du) - B-(∫λ̄-(s_u)du)` on the fluid grid.
pub fn process_x<R: Rng + ?Sized>(fluid: &FluidSolution, rng: &mut R) -> GridSeries {
    let x = time_changed_bm(&clock_increments(&fluid.plus), &clock_increments(&fluid.minus), rng);
    GridSeries::new(fluid.grid_step(), x, SeriesRole::Fluctuation).expect("fluid grid is valid")
}

/// Covariance function sampled on a coarse uniform time grid, read back by
/// bilinear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovGrid {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl CovGrid {
    pub fn from_fn(horizon: f64, n_points: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if n_points < 2 || !(horizon > 0.0) {
            return Err(Error::Argument(format!("covariance grid needs ≥ 2 points on a positive horizon, got {n_points}")));
        }
        let times: Vec<f64> = (0..n_points).map(|k| horizon * k as f64 / (n_points - 1) as f64).collect();
        let values = times.iter().map(|&t| times.iter().map(|&u| f(t, u)).collect()).collect();
        Ok(Self { times, values })
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.times.len();
        let x = (t / self.horizon() * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        (k, x - k as f64)
    }

    pub fn at(&self, t: f64, u: f64) -> f64 {
        let (i, a) = self.locate(t);
        let (j, b) = self.locate(u);
        let v = &self.values;
        (1.0 - a) * ((1.0 - b) * v[i][j] + b * v[i][j + 1]) + a * ((1.0 - b) * v[i + 1][j] + b * v[i + 1][j + 1])
    }

    /// Interpolated matrix on `0, dt, ..., n_steps·dt`.
    pub fn on_grid(&self, grid_step: f64, n_steps: usize) -> Vec<Vec<f64>> {
        let t: Vec<f64> = (0..=n_steps).map(|k| k as f64 * grid_step).collect();
        let mut m = vec![vec![0.0; n_steps + 1]; n_steps + 1];
        for i in 0..=n_steps {
            for j in 0..=i {
                let v = 0.5 * (self.at(t[i], t[j]) + self.at(t[j], t[i]));
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 0.0)
    }
}

/// Monte Carlo `γ(t,u) = Cov(λ(x_t, s_t), λ(x_u, s_u))` over stationary mood
/// paths running at the physical speed (`T = 1`).
pub fn gamma_cov<R: Rng + ?Sized>(
    spec: &SemiMarkovSpec,
    rates: &RateSpec,
    fluid: &FluidSolution,
    n_points: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<CovGrid> {
    gamma_cov_scaled(spec, rates, fluid, 1.0, n_points, n_mc, rng)
}

/// As [`gamma_cov`] with mood clocks running at speed `time_scale`.
pub fn gamma_cov_scaled<R: Rng + ?Sized>(
    spec: &SemiMarkovSpec,
    rates: &RateSpec,
    fluid: &FluidSolution,
    time_scale: f64,
    n_points: usize,
    n_mc: usize,
    rng: &mut R,
) -> Result<CovGrid> {
    if n_mc < MIN_GAMMA_PATHS {
        return Err(Error::Argument(format!("n_mc = {n_mc} is below the minimum of {MIN_GAMMA_PATHS} paths")));
    }
    let mut grid = CovGrid::from_fn(fluid.horizon(), n_points, |_, _| 0.0)?;
    let s: Vec<f64> = grid.times.iter().map(|&t| fluid.s_at(t)).collect();
    let horizon = fluid.horizon() * time_scale;
    let mut sum = vec![0.0; n_points];
    let mut cross = vec![vec![0.0; n_points]; n_points];
    let mut lam = vec![0.0; n_points];
    for _ in 0..n_mc {
        let mut k = 0;
        for (_, end, idx) in spec.segments(horizon, rng, true) {
            while k < n_points && (grid.times[k] * time_scale < end || k == n_points - 1 && end >= horizon) {
                lam[k] = rates.net(idx, s[k]);
                k += 1;
            }
        }
        for i in 0..n_points {
            sum[i] += lam[i];
            for j in 0..=i {
                cross[i][j] += lam[i] * lam[j];
            }
        }
    }
    let m = n_mc as f64;
    for i in 0..n_points {
        for j in 0..=i {
            let c = cross[i][j] / m - sum[i] / m * sum[j] / m;
            grid.values[i][j] = c;
            grid.values[j][i] = c;
        }
    }
    Ok(grid)
}

/// Exact `γ` for two-state Markov moods: `Var_ν(f) e^{-(a+b)|t-u|} g(s_t) g(s_u)`,
/// with `a`, `b` the effective rates of leaving each state.
pub fn on_off_gamma(spec: &SemiMarkovSpec, rates: &RateSpec, fluid: &FluidSolution, n_points: usize) -> Result<CovGrid> {
    if spec.len() != 2 {
        return Err(Error::Argument(format!("on/off covariance needs 2 states, spec has {}", spec.len())));
    }
    rates.require_separable()?;
    let mut leave = [0.0; 2];
    for (i, l) in leave.iter_mut().enumerate() {
        match spec.law(i) {
            SojournLaw::Exponential { rate } => *l = rate * (1.0 - spec.embedded_matrix()[i][i]),
            other => return Err(Error::Argument(format!("on/off covariance needs exponential sojourns, state {i} has {other:?}"))),
        }
    }
    let (a, b) = (leave[0], leave[1]);
    let f = rates.f();
    let var_f = (f[1] - f[0]).powi(2) * a * b / (a + b).powi(2);
    CovGrid::from_fn(fluid.horizon(), n_points, |t, u| {
        var_f * (-(a + b) * (t - u).abs()).exp() * rates.g(fluid.s_at(t)) * rates.g(fluid.s_at(u))
    })
}

/// One draw of the second-order limit and its components.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderPath {
    pub z: GridSeries,
    pub x: GridSeries,
    pub y: GridSeries,
}

/// Reusable sampler for `Z`, factorizing `γ` once.
pub struct ZSampler {
    grid_step: f64,
    drift: Vec<f64>,
    clock_plus: Vec<f64>,
    clock_minus: Vec<f64>,
    y: GaussianSampler,
}

impl ZSampler {
    pub fn new(fluid: &FluidSolution, gamma: &CovGrid) -> Result<Self> {
        if (gamma.horizon() - fluid.horizon()).abs() > 1e-9 * fluid.horizon() {
            return Err(Error::Argument(format!(
                "covariance horizon {} differs from fluid horizon {}",
                gamma.horizon(),
                fluid.horizon()
            )));
        }
        let dt = fluid.grid_step();
        let n = fluid.len() - 1;
        Ok(Self {
            grid_step: dt,
            drift: fluid.net_derivative.values().to_vec(),
            clock_plus: clock_increments(&fluid.plus),
            clock_minus: clock_increments(&fluid.minus),
            y: GaussianSampler::new(&gamma.on_grid(dt, n))?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SecondOrderPath {
        let dt = self.grid_step;
        let x = time_changed_bm(&self.clock_plus, &self.clock_minus, rng);
        let y_density = GridSeries::new(dt, self.y.sample(rng), SeriesRole::Generic).expect("grid is valid");
        let y = y_density.cumulative_trapezoid().into_values();
        let mut z = Vec::with_capacity(x.len());
        z.push(0.0);
        for k in 0..x.len() - 1 {
            let prev = z[k];
            z.push(prev + self.drift[k] * prev * dt + (y[k + 1] - y[k]) + (x[k + 1] - x[k]));
        }
        let series = |v: Vec<f64>| GridSeries::new(dt, v, SeriesRole::Fluctuation).expect("grid is valid");
        SecondOrderPath {
            z: series(z),
            x: series(x),
            y: series(y),
        }
    }
}

/// One path of `Z` (see [`ZSampler`] for repeated draws).
pub fn simulate_z<R: Rng + ?Sized>(fluid: &FluidSolution, gamma: &CovGrid, rng: &mut R) -> Result<GridSeries> {
    Ok(ZSampler::new(fluid, gamma)?.sample(rng).z)
}

/// Reusable sampler for `dẐ = λ̄′(s_t) Ẑ dt + σ g(s_t) dB^H`.
pub struct FouLimitSampler {
    drift: GridSeries,
    diffusion: GridSeries,
    sigma: f64,
    fbm: FbmGenerator,
}

impl FouLimitSampler {
    pub fn new(fluid: &FluidSolution, rates: &RateSpec, sigma: f64, hurst: f64) -> Result<Self> {
        rates.require_separable()?;
        if !(0.5..1.0).contains(&hurst) {
            return Err(Error::Domain {
                quantity: "H",
                value: hurst,
                domain: "[1/2, 1)",
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain {
                quantity: "σ",
                value: sigma,
                domain: "[0, ∞)",
            });
        }
        Ok(Self {
            drift: fluid.net_derivative.clone(),
            diffusion: fluid.s.map(|s| rates.g(s)).with_role(SeriesRole::Integrand),
            sigma,
            fbm: FbmGenerator::new(hurst, fluid.len() - 1, fluid.horizon())?,
        })
    }

    pub fn diffusion(&self) -> &GridSeries {
        &self.diffusion
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridSeries {
        let b = self.fbm.sample(rng);
        simulate_fou(&self.drift, &self.diffusion, self.sigma, &b).expect("grids built together")
    }
}

pub fn simulate_fou_limit<R: Rng + ?Sized>(fluid: &FluidSolution, rates: &RateSpec, sigma: f64, hurst: f64, rng: &mut R) -> Result<GridSeries> {
    Ok(FouLimitSampler::new(fluid, rates, sigma, hurst)?.sample(rng))
}

/// Rescaled mood-driven imbalance `T^{1-H} √N Y^{N,T}` with
/// `Y^{N,T}_t = ∫ g(s_u) ((1/N) Σ_a f(x^a_{Tu}) - E_ν f) du`.
pub fn rescaled_imbalance<R: Rng + ?Sized>(
    spec: &SemiMarkovSpec,
    rates: &RateSpec,
    fluid: &FluidSolution,
    n_agents: usize,
    time_scale: f64,
    hurst: f64,
    rng: &mut R,
) -> Result<GridSeries> {
    rates.require_separable()?;
    let centred: Vec<f64> = rates.f().iter().map(|v| v - rates.mean_f()).collect();
    let g = fluid.s.map(|s| rates.g(s)).with_role(SeriesRole::Integrand);
    let y = simulate_no_feedback_mapped(n_agents, time_scale, &g, spec, &centred, rng)?;
    let scale = time_scale.powf(1.0 - hurst) * (n_agents as f64).sqrt();
    Ok(y.map(|v| scale * v).with_role(SeriesRole::Fluctuation))
}

/// `σ` matched on the variance at the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub sigma: f64,
    pub empirical_variance: f64,
    /// `Var(∫ g(s_u) dB^H_u)` over the horizon.
    pub unit_variance: f64,
    pub samples: usize,
}

/// `Var(∫_0^horizon g dB^H)` with left-endpoint weights `g_k`.
pub fn fou_unit_variance(diffusion: &GridSeries, hurst: f64) -> f64 {
    let g = diffusion.values();
    weighted_increment_variance(&g[..g.len() - 1], hurst, diffusion.grid_step())
}

pub fn estimate_sigma(terminal_values: &[f64], diffusion: &GridSeries, hurst: f64) -> Result<SigmaEstimate> {
    let n = terminal_values.len();
    if n < 2 {
        return Err(Error::Degenerate(format!("{n} samples cannot fix a variance")));
    }
    let mean = terminal_values.iter().sum::<f64>() / n as f64;
    let var = terminal_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let unit = fou_unit_variance(diffusion, hurst);
    if !(unit > 0.0) {
        return Err(Error::Degenerate("g vanishes along the fluid path".into()));
    }
    Ok(SigmaEstimate {
        sigma: (var / unit).sqrt(),
        empirical_variance: var,
        unit_variance: unit,
        samples: n,
    })
}
