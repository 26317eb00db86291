//! Estimators and checks for the limit theorems: regression helpers, moment
//! accumulators, Hurst estimators and Kolmogorov-Smirnov tests.

pub mod hurst;
pub mod ks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::GridSeries;

pub use hurst::{hurst_dfa, hurst_rs, hurst_wavelet, hurst_wavelet_default, HurstEstimate, HurstMethod};
pub use ks::{kolmogorov_sf, ks_normal, ks_two_sample, normal_cdf, poisson_clt_check, KsTest, PoissonClt};

/// Straight-line fit `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_ols(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares; `slope_stderr` uses the weighted residual
/// variance with `n - 2` degrees of freedom (0 for two points).
pub fn weighted_ols(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if y.len() != n || w.len() != n {
        return Err(Error::Argument(format!("regression inputs have lengths {}, {}, {}", n, y.len(), w.len())));
    }
    if n < 2 {
        return Err(Error::Argument(format!("regression needs ≥ 2 points, got {n}")));
    }
    if w.iter().any(|&v| !(v > 0.0)) || x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("regression weights must be positive and data finite".into()));
    }
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += w[i] * (x[i] - mx).powi(2);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("regressor has no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    })
}

/// `max_k |a_k - b_k|` on a shared grid.
pub fn sup_error(a: &GridSeries, b: &GridSeries) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// OLS slope of `log error` against `log size`.
pub fn convergence_slope(sizes: &[f64], errors: &[f64]) -> Result<LinearFit> {
    if sizes.len() < 3 {
        return Err(Error::Argument(format!("convergence slope needs ≥ 3 points, got {}", sizes.len())));
    }
    if sizes.iter().chain(errors).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain {
            quantity: "size or error",
            value: sizes.iter().chain(errors).copied().find(|&v| !(v > 0.0)).unwrap_or(f64::NAN),
            domain: "(0, ∞)",
        });
    }
    let lx: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

/// Streaming count, mean and centred second moment, mergeable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    pub fn from_slice(v: &[f64]) -> Self {
        let mut m = Self::default();
        v.iter().for_each(|&x| m.push(x));
        m
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        Moments {
            count: self.count + other.count,
            mean: self.mean + d * other.count as f64 / n,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Unbiased sample variance; 0 below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count.max(1) as f64).sqrt()
    }
}

/// Merges accumulators over a fixed balanced tree, so the result depends only
/// on their order and never on how they were produced.
pub fn tree_merge(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => tree_merge(&parts[..n / 2]).merge(&tree_merge(&parts[n / 2..])),
    }
}

/// Linear-interpolation quantile of unsorted data (`q ∈ [0,1]`).
pub fn quantile(data: &[f64], q: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(data: &[f64]) -> f64 {
    quantile(data, 0.5)
}

/// Mean, variance and quantiles across an ensemble at each grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub grid_step: f64,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

impl EnsembleSummary {
    pub fn from_paths(paths: &[GridSeries]) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::Argument("empty ensemble".into()))?;
        for p in paths {
            first.check_same_grid(p)?;
        }
        let mut column = vec![0.0; paths.len()];
        let rows = (0..first.len())
            .map(|k| {
                for (c, p) in column.iter_mut().zip(paths) {
                    *c = p.values()[k];
                }
                let m = tree_merge(&column.iter().map(|&v| Moments::from_slice(&[v])).collect::<Vec<_>>());
                column.sort_by(f64::total_cmp);
                SummaryRow {
                    time: first.time(k),
                    mean: m.mean,
                    variance: m.variance(),
                    q05: quantile_sorted(&column, 0.05),
                    q50: quantile_sorted(&column, 0.5),
                    q95: quantile_sorted(&column, 0.95),
                }
            })
            .collect();
        Ok(Self {
            grid_step: first.grid_step(),
            rows,
        })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time,mean,variance,q05,q50,q95\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.time, r.mean, r.variance, r.q05, r.q50, r.q95));
        }
        out
    }
}
