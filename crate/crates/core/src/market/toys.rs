//! Two small price models: a linear recursion with random coefficients and a
//! diffusion whose order rates are driven by fractional Brownian motion.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{FbmGenerator, FbmPath};
use crate::series::{GridSeries, SeriesRole};

use super::rates::ScalarFn;

/// Law of one scalar coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarLaw {
    Constant { value: f64 },
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    /// Uniform over a finite set of values.
    Discrete { values: Vec<f64> },
}

impl ScalarLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ScalarLaw::Constant { value } => value.is_finite(),
            ScalarLaw::Normal { mean, sd } => mean.is_finite() && *sd >= 0.0 && sd.is_finite(),
            ScalarLaw::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            ScalarLaw::Discrete { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invariant("coefficient law parameters valid", format!("{self:?}")))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarLaw::Constant { value } => *value,
            ScalarLaw::Normal { mean, sd } => Normal::new(*mean, *sd).expect("validated").sample(rng),
            ScalarLaw::Uniform { low, high } => rng.random_range(*low..*high),
            ScalarLaw::Discrete { values } => values[rng.random_range(0..values.len())],
        }
    }

    /// `E log|1 + c|`, negative for a contracting recursion. Only closed for
    /// constant and discrete laws.
    pub fn log_contraction(&self) -> Option<f64> {
        match self {
            ScalarLaw::Constant { value } => Some((1.0 + value).abs().ln()),
            ScalarLaw::Discrete { values } => Some(values.iter().map(|v| (1.0 + v).abs().ln()).sum::<f64>() / values.len() as f64),
            _ => None,
        }
    }
}

/// Joint law of the multiplicative and additive coefficients, drawn
/// independently at every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientLaw {
    pub multiplicative: ScalarLaw,
    pub additive: ScalarLaw,
}

/// `S_t = (1 + c̃_t) S_{t-1} + c_t`, returned with `S_0` first.
pub fn simulate_random_coeff<R: Rng + ?Sized>(n_steps: usize, law: &CoefficientLaw, s0: f64, rng: &mut R) -> Result<Vec<f64>> {
    law.multiplicative.validate()?;
    law.additive.validate()?;
    let mut s = Vec::with_capacity(n_steps + 1);
    s.push(s0);
    let mut x = s0;
    for _ in 0..n_steps {
        let m = law.multiplicative.sample(rng);
        let a = law.additive.sample(rng);
        x = (1.0 + m) * x + a;
        s.push(x);
    }
    Ok(s)
}

/// Price, its drift-only counterpart, and the fBm that drove both.
#[derive(Debug, Clone, PartialEq)]
pub struct FracVolPath {
    pub price: GridSeries,
    pub drift_only: GridSeries,
    pub fbm: FbmPath,
}

/// `S_t = ∫ λ(B^H_u) du + T^{-1/2} (∫ √λ+(B^H_u) dW+_u - ∫ √λ-(B^H_u) dW-_u)`
/// by left-point Euler, with `λ = λ+ - λ-`.
pub fn simulate_fractional_vol<R: Rng + ?Sized>(
    rate_plus: &ScalarFn,
    rate_minus: &ScalarFn,
    time_scale: f64,
    hurst: f64,
    n_steps: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<FracVolPath> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::Domain {
            quantity: "H",
            value: hurst,
            domain: "(1/2, 1)",
        });
    }
    if !(time_scale > 0.0 && time_scale.is_finite()) {
        return Err(Error::Domain {
            quantity: "T",
            value: time_scale,
            domain: "(0, ∞)",
        });
    }
    let fbm = FbmGenerator::new(hurst, n_steps, horizon)?.sample(rng);
    let dt = fbm.grid_step;
    let mut lp = Vec::with_capacity(n_steps + 1);
    let mut lm = Vec::with_capacity(n_steps + 1);
    for (k, &b) in fbm.values.iter().enumerate() {
        let (p, m) = (rate_plus.eval(b), rate_minus.eval(b));
        if !(p >= 0.0 && m >= 0.0) {
            return Err(Error::invariant(
                "order rates non-negative",
                format!("λ+ = {p}, λ- = {m} at grid point {k} (B^H = {b})"),
            ));
        }
        lp.push(p);
        lm.push(m);
    }
    let noise = (dt / time_scale).sqrt();
    let mut price = Vec::with_capacity(n_steps + 1);
    let mut drift = Vec::with_capacity(n_steps + 1);
    let (mut s, mut d) = (0.0, 0.0);
    price.push(0.0);
    drift.push(0.0);
    for k in 0..n_steps {
        let zp: f64 = StandardNormal.sample(rng);
        let zm: f64 = StandardNormal.sample(rng);
        let step = (lp[k] - lm[k]) * dt;
        d += step;
        s += step + noise * (lp[k].sqrt() * zp - lm[k].sqrt() * zm);
        price.push(s);
        drift.push(d);
    }
    Ok(FracVolPath {
        price: GridSeries::new(dt, price, SeriesRole::Price)?,
        drift_only: GridSeries::new(dt, drift, SeriesRole::Fluid)?,
        fbm,
    })
}
