//! Uniform-grid time series and their CSV form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeriesRole {
    Price,
    Fluid,
    Fluctuation,
    Integrand,
    #[default]
    Generic,
}

/// Values sampled at `t_k = k * grid_step`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSeries {
    grid_step: f64,
    values: Vec<f64>,
    pub role: SeriesRole,
}

impl GridSeries {
    pub fn new(grid_step: f64, values: Vec<f64>, role: SeriesRole) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::invariant("grid_step > 0", format!("got {grid_step}")));
        }
        if values.is_empty() {
            return Err(Error::invariant("values non-empty", "empty series"));
        }
        Ok(Self {
            grid_step,
            values,
            role,
        })
    }

    /// Samples `f` on `n_steps + 1` points of `[0, n_steps * grid_step]`.
    pub fn from_fn(grid_step: f64, n_steps: usize, role: SeriesRole, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..=n_steps).map(|k| f(k as f64 * grid_step)).collect();
        Self::new(grid_step, values, role)
    }

    pub fn constant(grid_step: f64, n_steps: usize, value: f64, role: SeriesRole) -> Result<Self> {
        Self::new(grid_step, vec![value; n_steps + 1], role)
    }

    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.grid_step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty by construction")
    }

    pub fn with_role(mut self, role: SeriesRole) -> Self {
        self.role = role;
        self
    }

    /// Same step and length (step compared to 1e-12 relative).
    pub fn same_grid(&self, other: &GridSeries) -> bool {
        self.values.len() == other.values.len()
            && (self.grid_step - other.grid_step).abs() <= 1e-12 * self.grid_step.max(other.grid_step)
    }

    pub fn check_same_grid(&self, other: &GridSeries) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_len: self.values.len(),
                left_dt: self.grid_step,
                right_len: other.values.len(),
                right_dt: other.grid_step,
            })
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridSeries {
        GridSeries {
            grid_step: self.grid_step,
            values: self.values.iter().map(|&v| f(v)).collect(),
            role: self.role,
        }
    }

    pub fn zip_with(&self, other: &GridSeries, f: impl Fn(f64, f64) -> f64) -> Result<GridSeries> {
        self.check_same_grid(other)?;
        Ok(GridSeries {
            grid_step: self.grid_step,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
            role: self.role,
        })
    }

    /// Every `factor`-th point; the step grows by `factor`.
    pub fn subsample(&self, factor: usize) -> Result<GridSeries> {
        if factor == 0 || (self.values.len() - 1) % factor != 0 {
            return Err(Error::Argument(format!(
                "subsample factor {factor} does not divide {} steps",
                self.values.len() - 1
            )));
        }
        Ok(GridSeries {
            grid_step: self.grid_step * factor as f64,
            values: self.values.iter().step_by(factor).copied().collect(),
            role: self.role,
        })
    }

    /// Cumulative trapezoid `∫_0^{t_k} v dt`, starting at 0.
    pub fn cumulative_trapezoid(&self) -> GridSeries {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.values.len());
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * self.grid_step;
            out.push(acc);
        }
        GridSeries {
            grid_step: self.grid_step,
            values: out,
            role: self.role,
        }
    }

    /// First differences, one shorter than the series.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Two-column `time,value` CSV with shortest round-trip decimals.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", self.time(k), v);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv_string().as_bytes())
    }

    /// Inverse of [`GridSeries::write_csv`]. The step is taken from the
    /// second row; the time column is otherwise ignored.
    pub fn read_csv<R: BufRead>(r: R, role: SeriesRole) -> Result<GridSeries> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Argument(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Argument(format!("line {}: expected `time,value`", lineno + 1)))
            };
            times.push(parse(cols.next())?);
            values.push(parse(cols.next())?);
        }
        if times.len() < 2 {
            return Err(Error::Argument("need at least two rows to infer grid step".into()));
        }
        GridSeries::new(times[1] - times[0], values, role)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grid() {
        assert!(GridSeries::new(0.0, vec![1.0], SeriesRole::Generic).is_err());
        assert!(GridSeries::new(0.1, vec![], SeriesRole::Generic).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = GridSeries::from_fn(1.0 / 3.0, 50, SeriesRole::Price, |t| (t * 7.1).sin() / 3.0).unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("0,0\n"));
        let back = GridSeries::read_csv(text.as_bytes(), SeriesRole::Price).unwrap();
        assert_eq!(back.values(), s.values());
    }

    #[test]
    fn trapezoid_of_linear() {
        let s = GridSeries::from_fn(0.01, 100, SeriesRole::Generic, |t| t).unwrap();
        assert!((s.cumulative_trapezoid().last() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let s = GridSeries::from_fn(0.25, 8, SeriesRole::Generic, |t| t).unwrap();
        let c = s.subsample(4).unwrap();
        assert_eq!(c.values(), &[0.0, 1.0, 2.0]);
        assert_eq!(c.grid_step(), 1.0);
        assert!(s.subsample(3).is_err());
    }
}
