//! Mean order flow and the deterministic fluid trajectory `ds/dt = λ̄(s)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::series::{GridSeries, SeriesRole};

use super::rates::RateSpec;

type ScalarFnBox = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const FD_STEP: f64 = 1e-6;

/// `λ̄±(s) = Σ_i ν_i λ±(i, s)` and the derived net rate and its slope.
#[derive(Clone)]
pub struct MeanRates {
    plus: ScalarFnBox,
    minus: ScalarFnBox,
    net_derivative: Option<ScalarFnBox>,
}

impl fmt::Debug for MeanRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MeanRates")
            .field("analytic_derivative", &self.net_derivative.is_some())
            .finish()
    }
}

impl MeanRates {
    /// From arbitrary mean buy/sell rates; `λ̄′` falls back to central
    /// differences.
    pub fn from_fns(
        plus: impl Fn(f64) -> f64 + Send + Sync + 'static,
        minus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            plus: Arc::new(plus),
            minus: Arc::new(minus),
            net_derivative: None,
        }
    }

    pub fn with_net_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.net_derivative = Some(Arc::new(d));
        self
    }

    pub fn plus(&self, s: f64) -> f64 {
        (self.plus)(s)
    }

    pub fn minus(&self, s: f64) -> f64 {
        (self.minus)(s)
    }

    pub fn net(&self, s: f64) -> f64 {
        self.plus(s) - self.minus(s)
    }

    pub fn net_derivative(&self, s: f64) -> f64 {
        match &self.net_derivative {
            Some(d) => d(s),
            None => (self.net(s + FD_STEP) - self.net(s - FD_STEP)) / (2.0 * FD_STEP),
        }
    }
}

/// Averages the rate functions over the occupation law `nu` (indexed like the
/// semi-Markov states the rates were built for).
pub fn mean_rates(rates: &RateSpec, nu: &[f64]) -> Result<MeanRates> {
    if nu.len() != rates.f().len() {
        return Err(Error::Argument(format!(
            "occupation law has {} entries, rates cover {} states",
            nu.len(),
            rates.f().len()
        )));
    }
    if nu.iter().any(|&p| p < 0.0) || (nu.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invariant("ν is a probability vector", format!("{nu:?}")));
    }
    let (r1, r2, r3) = (rates.clone(), rates.clone(), rates.clone());
    let (n1, n2, n3) = (nu.to_vec(), nu.to_vec(), nu.to_vec());
    Ok(MeanRates {
        plus: Arc::new(move |s| n1.iter().enumerate().map(|(i, p)| p * r1.plus(i, s)).sum()),
        minus: Arc::new(move |s| n2.iter().enumerate().map(|(i, p)| p * r2.minus(i, s)).sum()),
        net_derivative: Some(Arc::new(move |s| {
            n3.iter()
                .enumerate()
                .map(|(i, p)| p * (r3.plus_derivative(i, s) - r3.minus_derivative(i, s)))
                .sum()
        })),
    })
}

/// Classical fourth-order Runge-Kutta on a uniform grid.
pub fn integrate_rk4(f: impl Fn(f64) -> f64, s0: f64, horizon: f64, dt: f64) -> Result<GridSeries> {
    let n = grid_steps(horizon, dt)?;
    let mut s = Vec::with_capacity(n + 1);
    s.push(s0);
    let mut x = s0;
    for _ in 0..n {
        let k1 = f(x);
        let k2 = f(x + 0.5 * dt * k1);
        let k3 = f(x + 0.5 * dt * k2);
        let k4 = f(x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        s.push(x);
    }
    GridSeries::new(dt, s, SeriesRole::Fluid)
}

pub(crate) fn grid_steps(horizon: f64, dt: f64) -> Result<usize> {
    if !(horizon > 0.0 && dt > 0.0 && horizon.is_finite()) {
        return Err(Error::Argument(format!("horizon {horizon} and step {dt} must be positive")));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Argument(format!("step {dt} does not divide horizon {horizon}")));
    }
    Ok(n as usize)
}

/// Fluid trajectory with the mean rates recorded along it.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidSolution {
    pub s: GridSeries,
    pub net: GridSeries,
    pub plus: GridSeries,
    pub minus: GridSeries,
    pub net_derivative: GridSeries,
}

impl FluidSolution {
    pub fn grid_step(&self) -> f64 {
        self.s.grid_step()
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.s.horizon()
    }

    /// Linear interpolation of `s` at time `t`.
    pub fn s_at(&self, t: f64) -> f64 {
        let v = self.s.values();
        let x = (t / self.grid_step()).clamp(0.0, (v.len() - 1) as f64);
        let k = (x.floor() as usize).min(v.len() - 2);
        let w = x - k as f64;
        v[k] * (1.0 - w) + v[k + 1] * w
    }

    /// `max_k |Δs/Δt - ½(λ̄(s_k) + λ̄(s_{k+1}))|`, which is `O(dt²)`.
    pub fn ode_residual(&self) -> f64 {
        let dt = self.grid_step();
        let s = self.s.values();
        let r = self.net.values();
        (0..s.len() - 1)
            .map(|k| ((s[k + 1] - s[k]) / dt - 0.5 * (r[k] + r[k + 1])).abs())
            .fold(0.0, f64::max)
    }
}

pub fn solve_fluid(rates: &MeanRates, s0: f64, horizon: f64, dt: f64) -> Result<FluidSolution> {
    if dt > 1e-2 {
        return Err(Error::Argument(format!("fluid step {dt} exceeds 1e-2")));
    }
    let s = integrate_rk4(|x| rates.net(x), s0, horizon, dt)?;
    let along = |f: &dyn Fn(f64) -> f64| s.map(f).with_role(SeriesRole::Integrand);
    Ok(FluidSolution {
        net: along(&|x| rates.net(x)),
        plus: along(&|x| rates.plus(x)),
        minus: along(&|x| rates.minus(x)),
        net_derivative: along(&|x| rates.net_derivative(x)),
        s,
    })
}
