//! Price driven by the aggregate holdings of inert agents, without feedback:
//! `S_t = (1/N) ∫_0^t Ψ_u Σ_a x^a_{Tu} du`.
//!
//! The occupation integral `∫_0^{t_k} Σ_a x^a_{Tu} du` is accumulated exactly
//! at every grid point from the agents' sojourns (difference arrays over slope
//! and intercept, O(1) per sojourn). `Ψ` enters through the trapezoid rule.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semi_markov::SemiMarkovSpec;
use crate::series::{GridSeries, SeriesRole};

use super::fluid::grid_steps;

/// Price elasticity `Ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Elasticity {
    Constant { value: f64 },
    /// `exp(drift·t + vol·W_t)`.
    ExpBrownian { drift: f64, vol: f64 },
}

impl Default for Elasticity {
    fn default() -> Self {
        Elasticity::Constant { value: 1.0 }
    }
}

impl Elasticity {
    pub fn is_random(&self) -> bool {
        matches!(self, Elasticity::ExpBrownian { vol, .. } if *vol != 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, grid_step: f64, n_steps: usize, rng: &mut R) -> Result<GridSeries> {
        match *self {
            Elasticity::Constant { value } => GridSeries::constant(grid_step, n_steps, value, SeriesRole::Integrand),
            Elasticity::ExpBrownian { drift, vol } => {
                let sd = grid_step.sqrt();
                let mut w = 0.0;
                let mut values = Vec::with_capacity(n_steps + 1);
                values.push(1.0);
                for k in 1..=n_steps {
                    let z: f64 = StandardNormal.sample(rng);
                    w += sd * z;
                    values.push((drift * k as f64 * grid_step + vol * w).exp());
                }
                GridSeries::new(grid_step, values, SeriesRole::Integrand)
            }
        }
    }
}

/// Exact `F(t_k) = ∫_0^{t_k} Σ v(u) du` for piecewise-constant contributions.
#[derive(Debug, Clone)]
pub struct OccupationIntegral {
    grid_step: f64,
    slope: Vec<f64>,
    intercept: Vec<f64>,
}

impl OccupationIntegral {
    pub fn new(grid_step: f64, n_steps: usize) -> Self {
        Self {
            grid_step,
            slope: vec![0.0; n_steps + 2],
            intercept: vec![0.0; n_steps + 2],
        }
    }

    fn first_index_at_or_after(&self, t: f64) -> usize {
        let k = (t / self.grid_step).ceil().max(0.0) as usize;
        k.min(self.slope.len() - 1)
    }

    /// Adds `value` on `[start, end)`.
    pub fn add(&mut self, start: f64, end: f64, value: f64) {
        if value == 0.0 || end <= start {
            return;
        }
        let ks = self.first_index_at_or_after(start);
        let ke = self.first_index_at_or_after(end);
        self.slope[ks] += value;
        self.slope[ke] -= value;
        self.intercept[ks] -= value * start;
        self.intercept[ke] += value * end;
    }

    pub fn finish(self) -> Vec<f64> {
        let n = self.slope.len() - 1;
        let mut out = Vec::with_capacity(n);
        let (mut a, mut b) = (0.0, 0.0);
        for k in 0..n {
            a += self.slope[k];
            b += self.intercept[k];
            out.push(a * (k as f64 * self.grid_step) + b);
        }
        out
    }
}

/// `(1/N) ∫ Ψ dF` on the grid of `psi`, trapezoid in `Ψ`.
pub fn integrate_against(psi: &GridSeries, occupation: &[f64], n_agents: usize) -> Result<GridSeries> {
    if occupation.len() != psi.len() {
        return Err(Error::Argument(format!("{} occupation points for {} grid points", occupation.len(), psi.len())));
    }
    let p = psi.values();
    let scale = 1.0 / n_agents as f64;
    let mut s = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    s.push(0.0);
    for k in 0..p.len() - 1 {
        acc += 0.5 * (p[k] + p[k + 1]) * (occupation[k + 1] - occupation[k]) * scale;
        s.push(acc);
    }
    GridSeries::new(psi.grid_step(), s, SeriesRole::Price)
}

/// No-feedback price with agent holdings equal to their state labels.
pub fn simulate_no_feedback<R: Rng + ?Sized>(
    n_agents: usize,
    time_scale: f64,
    psi: &GridSeries,
    spec: &SemiMarkovSpec,
    rng: &mut R,
) -> Result<GridSeries> {
    let labels: Vec<f64> = spec.states().iter().map(|&s| s as f64).collect();
    simulate_no_feedback_mapped(n_agents, time_scale, psi, spec, &labels, rng)
}

/// As [`simulate_no_feedback`] with holdings `values[i]` in state `i`.
pub fn simulate_no_feedback_mapped<R: Rng + ?Sized>(
    n_agents: usize,
    time_scale: f64,
    psi: &GridSeries,
    spec: &SemiMarkovSpec,
    values: &[f64],
    rng: &mut R,
) -> Result<GridSeries> {
    if n_agents == 0 {
        return Err(Error::invariant("N ≥ 1", "n_agents = 0"));
    }
    if !(time_scale >= 1.0 && time_scale.is_finite()) {
        return Err(Error::invariant("T ≥ 1", format!("time_scale = {time_scale}")));
    }
    if values.len() != spec.len() {
        return Err(Error::Argument(format!("{} holdings for {} states", values.len(), spec.len())));
    }
    let dt = psi.grid_step();
    let n_steps = psi.len() - 1;
    let horizon = psi.horizon();
    grid_steps(horizon, dt)?;
    let mut occ = OccupationIntegral::new(dt, n_steps);
    for _ in 0..n_agents {
        for (start, end, idx) in spec.segments(horizon * time_scale, rng, true) {
            occ.add(start / time_scale, end / time_scale, values[idx]);
        }
    }
    integrate_against(psi, &occ.finish(), n_agents)
}

/// Law-of-large-numbers limit `μ ∫_0^t Ψ_u du`, trapezoid in `Ψ`.
pub fn no_feedback_reference(mean_holding: f64, psi: &GridSeries) -> GridSeries {
    psi.cumulative_trapezoid().map(|v| mean_holding * v).with_role(SeriesRole::Fluid)
}
