//! Semi-Markov "trading mood" processes.
//!
//! A process is described by an embedded Markov chain `P` on a finite set of
//! integer states and one sojourn law per state. The kernel is
//! `Q(i, j, t) = p_ij * G_i(t)`: the holding time depends on the state being
//! left only. State `0` is the inactive state; giving it a Pareto law with
//! tail index in `(1, 2)` produces heavy-tailed inactivity and long memory in
//! aggregates of many independent copies.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;
const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
const WEIBULL_RESIDUAL_TOL: f64 = 1e-10;

/// Holding-time distribution of a single state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SojournLaw {
    Exponential { rate: f64 },
    /// Survival `(scale / t)^tail` for `t >= scale`.
    Pareto { scale: f64, tail: f64 },
    /// Survival `exp(-(t / scale)^shape)`.
    Weibull { shape: f64, scale: f64 },
    Deterministic { value: f64 },
}

impl SojournLaw {
    fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            SojournLaw::Exponential { rate } => vec![("rate", rate)],
            SojournLaw::Pareto { scale, tail } => vec![("scale", scale), ("tail", tail)],
            SojournLaw::Weibull { shape, scale } => vec![("shape", shape), ("scale", scale)],
            SojournLaw::Deterministic { value } => vec![("value", value)],
        }
    }

    /// Parameters strictly positive and finite; Pareto mean finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.params() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invariant(
                    "law parameters strictly positive",
                    format!("{name} = {v}"),
                ));
            }
        }
        if let SojournLaw::Pareto { tail, .. } = *self {
            if tail <= 1.0 {
                return Err(Error::invariant(
                    "finite mean sojourn",
                    format!("Pareto tail {tail} <= 1 has infinite mean"),
                ));
            }
        }
        Ok(())
    }

    pub fn is_heavy_tailed(&self) -> bool {
        matches!(self, SojournLaw::Pareto { .. })
    }

    pub fn tail_index(&self) -> Option<f64> {
        match *self {
            SojournLaw::Pareto { tail, .. } => Some(tail),
            _ => None,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SojournLaw::Exponential { rate } => 1.0 / rate,
            SojournLaw::Pareto { scale, tail } => tail * scale / (tail - 1.0),
            SojournLaw::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            SojournLaw::Deterministic { value } => value,
        }
    }

    /// `P{T > t}`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match *self {
            SojournLaw::Exponential { rate } => (-rate * t).exp(),
            SojournLaw::Pareto { scale, tail } => {
                if t < scale {
                    1.0
                } else {
                    (scale / t).powf(tail)
                }
            }
            SojournLaw::Weibull { shape, scale } => (-(t / scale).powf(shape)).exp(),
            SojournLaw::Deterministic { value } => {
                if t < value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// Draw one holding time by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SojournLaw::Exponential { rate } => -open_unit(rng).ln() / rate,
            SojournLaw::Pareto { scale, tail } => scale * open_unit(rng).powf(-1.0 / tail),
            SojournLaw::Weibull { shape, scale } => scale * (-open_unit(rng).ln()).powf(1.0 / shape),
            SojournLaw::Deterministic { value } => value,
        }
    }

    /// CDF of the stationary excess (residual) law, density `(1 - G(t)) / m`.
    pub fn residual_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            SojournLaw::Exponential { rate } => 1.0 - (-rate * t).exp(),
            SojournLaw::Pareto { scale, tail } => {
                let m = self.mean();
                if t <= scale {
                    t / m
                } else {
                    (scale + scale * (1.0 - (scale / t).powf(tail - 1.0)) / (tail - 1.0)) / m
                }
            }
            SojournLaw::Weibull { shape, scale } => gamma_lr(1.0 / shape, (t / scale).powf(shape)),
            SojournLaw::Deterministic { value } => (t / value).min(1.0),
        }
    }

    /// Draw from the stationary excess law (time to the next jump seen from a
    /// uniformly chosen instant inside a sojourn of this law).
    pub fn sample_residual<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = open_unit(rng);
        match *self {
            SojournLaw::Exponential { rate } => -u.ln() / rate,
            SojournLaw::Pareto { scale, tail } => {
                let m = self.mean();
                let um = u * m;
                if um <= scale {
                    um
                } else {
                    let base = 1.0 - (tail - 1.0) * (um - scale) / scale;
                    scale * base.max(f64::MIN_POSITIVE).powf(-1.0 / (tail - 1.0))
                }
            }
            SojournLaw::Weibull { .. } => self.invert_residual_cdf(1.0 - u),
            SojournLaw::Deterministic { value } => u * value,
        }
    }

    fn invert_residual_cdf(&self, target: f64) -> f64 {
        let mut lo = 0.0;
        let mut hi = self.mean().max(1e-12);
        while self.residual_cdf(hi) < target {
            hi *= 2.0;
        }
        while hi - lo > WEIBULL_RESIDUAL_TOL * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if self.residual_cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Uniform on `(0, 1]`, safe for `ln` and negative powers.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

pub fn mean_sojourn(law: &SojournLaw) -> f64 {
    law.mean()
}

pub fn sample_sojourn<R: Rng + ?Sized>(law: &SojournLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

/// `H = (3 - α) / 2` for a tail index `α ∈ (1, 2)`.
pub fn hurst_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain {
            quantity: "tail index α",
            value: alpha,
            domain: "(1, 2)",
        });
    }
    Ok((3.0 - alpha) / 2.0)
}

/// Stationary distribution `π = πP` of a row-stochastic matrix.
///
/// Solved directly (normalization replacing one balance equation) with a few
/// rounds of iterative refinement, so periodic and nearly decomposable chains
/// are handled without power-iteration slowdowns.
pub fn embedded_stationary(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 0 || p.iter().any(|row| row.len() != n) {
        return Err(Error::invariant("embedded matrix square", format!("{n} rows with ragged lengths")));
    }
    for (i, row) in p.iter().enumerate() {
        if row.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::invariant("entries of P non-negative", format!("row {i}: {row:?}")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invariant("rows of P sum to 1", format!("row {i} sums to {sum}")));
        }
    }

    // A x = b with A = P^T - I except last row = 1, b = e_{n-1}.
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for v in a[n - 1].iter_mut() {
        *v = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;

    let lu = Lu::factor(&a).ok_or_else(|| Error::Numeric {
        iterations: 0,
        reason: "balance equations are singular (chain not irreducible)".into(),
    })?;
    let mut pi = lu.solve(&b);
    const MAX_REFINE: usize = 4;
    let mut iterations = 0;
    loop {
        let residual = balance_residual(p, &pi);
        if residual < STATIONARY_RESIDUAL_TOL {
            break;
        }
        if iterations == MAX_REFINE {
            return Err(Error::Numeric {
                iterations,
                reason: format!("stationary residual {residual:e} above {STATIONARY_RESIDUAL_TOL:e}"),
            });
        }
        let r: Vec<f64> = (0..n)
            .map(|i| b[i] - (0..n).map(|j| a[i][j] * pi[j]).sum::<f64>())
            .collect();
        let d = lu.solve(&r);
        for (x, dx) in pi.iter_mut().zip(d) {
            *x += dx;
        }
        iterations += 1;
    }
    for v in pi.iter_mut() {
        if *v < 0.0 && *v > -1e-14 {
            *v = 0.0;
        }
    }
    Ok(pi)
}

fn balance_residual(p: &[Vec<f64>], pi: &[f64]) -> f64 {
    let n = pi.len();
    let mut worst = (pi.iter().sum::<f64>() - 1.0).abs();
    for j in 0..n {
        let v: f64 = (0..n).map(|i| pi[i] * p[i][j]).sum();
        worst = worst.max((v - pi[j]).abs());
    }
    worst
}

/// Dense LU with partial pivoting; sized for state spaces, not grids.
struct Lu {
    lu: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &[Vec<f64>]) -> Option<Self> {
        let n = a.len();
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let pivot = (k..n).max_by(|&i, &j| lu[i][k].abs().total_cmp(&lu[j][k].abs()))?;
            if lu[pivot][k].abs() < 1e-300 {
                return None;
            }
            lu.swap(k, pivot);
            perm.swap(k, pivot);
            for i in k + 1..n {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..n {
                    lu[i][j] -= f * lu[k][j];
                }
            }
        }
        Some(Self { lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

/// Outcome of one named structural check.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl InvariantCheck {
    pub(crate) fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

/// Serialized form of a [`SemiMarkovSpec`]; laws listed in state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiMarkovDef {
    pub states: Vec<i64>,
    pub embedded_matrix: Vec<Vec<f64>>,
    pub sojourn_laws: Vec<SojournLaw>,
}

impl SemiMarkovDef {
    /// Evaluates every structural invariant without stopping at the first
    /// failure.
    pub fn check_invariants(&self) -> Vec<InvariantCheck> {
        let mut checks = Vec::new();
        let n = self.states.len();

        checks.push(InvariantCheck::new(
            "state 0 present",
            self.states.contains(&0),
            format!("states {:?}", self.states),
        ));
        let mut sorted = self.states.clone();
        sorted.sort_unstable();
        sorted.dedup();
        checks.push(InvariantCheck::new(
            "states distinct",
            sorted.len() == n,
            format!("states {:?}", self.states),
        ));

        let square = self.embedded_matrix.len() == n && self.embedded_matrix.iter().all(|r| r.len() == n);
        checks.push(InvariantCheck::new(
            "embedded matrix square |E|×|E|",
            square,
            format!("{} states, {} rows", n, self.embedded_matrix.len()),
        ));
        let worst_row = self
            .embedded_matrix
            .iter()
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        checks.push(InvariantCheck::new(
            "rows of P sum to 1",
            worst_row <= ROW_SUM_TOL,
            format!("max |row sum - 1| = {worst_row:e}"),
        ));
        let min_entry = self
            .embedded_matrix
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        checks.push(InvariantCheck::new(
            "p_ij > 0",
            min_entry > 0.0,
            format!("min entry {min_entry}"),
        ));

        checks.push(InvariantCheck::new(
            "one sojourn law per state",
            self.sojourn_laws.len() == n,
            format!("{} laws for {} states", self.sojourn_laws.len(), n),
        ));
        let bad_law = self.sojourn_laws.iter().find_map(|l| l.validate().err());
        checks.push(InvariantCheck::new(
            "law parameters strictly positive",
            bad_law.is_none(),
            bad_law.map(|e| e.to_string()).unwrap_or_default(),
        ));

        for (state, law) in self.states.iter().zip(&self.sojourn_laws) {
            if *state == 0 {
                if let Some(alpha) = law.tail_index() {
                    checks.push(InvariantCheck::new(
                        "tail index α ∈ (1,2)",
                        alpha > 1.0 && alpha < 2.0,
                        format!("state 0 Pareto tail α = {alpha}"),
                    ));
                }
            } else {
                let thin = match law {
                    SojournLaw::Pareto { .. } => false,
                    SojournLaw::Weibull { shape, .. } => *shape >= 1.0,
                    _ => true,
                };
                checks.push(InvariantCheck::new(
                    "non-zero states thin-tailed",
                    thin,
                    format!("state {state}: {law:?}"),
                ));
            }
        }
        checks
    }
}

/// Validated semi-Markov specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SemiMarkovDef", into = "SemiMarkovDef")]
pub struct SemiMarkovSpec {
    states: Vec<i64>,
    matrix: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    laws: Vec<SojournLaw>,
    zero_index: usize,
    embedded: Vec<f64>,
    occupation: Vec<f64>,
}

impl TryFrom<SemiMarkovDef> for SemiMarkovSpec {
    type Error = Error;

    fn try_from(def: SemiMarkovDef) -> Result<Self> {
        SemiMarkovSpec::new(def.states, def.embedded_matrix, def.sojourn_laws)
    }
}

impl From<SemiMarkovSpec> for SemiMarkovDef {
    fn from(spec: SemiMarkovSpec) -> Self {
        SemiMarkovDef {
            states: spec.states,
            embedded_matrix: spec.matrix,
            sojourn_laws: spec.laws,
        }
    }
}

impl SemiMarkovSpec {
    pub fn new(states: Vec<i64>, embedded_matrix: Vec<Vec<f64>>, sojourn_laws: Vec<SojournLaw>) -> Result<Self> {
        let def = SemiMarkovDef {
            states,
            embedded_matrix,
            sojourn_laws,
        };
        if let Some(fail) = def.check_invariants().into_iter().find(|c| !c.passed) {
            return Err(Error::invariant(fail.name, fail.detail));
        }
        let SemiMarkovDef {
            states,
            embedded_matrix: matrix,
            sojourn_laws: laws,
        } = def;
        let zero_index = states.iter().position(|&s| s == 0).expect("checked above");
        let cumulative = matrix
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|&p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        let pi = embedded_stationary(&matrix)?;
        let weights: Vec<f64> = pi.iter().zip(&laws).map(|(p, l)| p * l.mean()).collect();
        let total: f64 = weights.iter().sum();
        let occupation = weights.iter().map(|w| w / total).collect();
        Ok(Self {
            states,
            matrix,
            cumulative,
            laws,
            zero_index,
            embedded: pi,
            occupation,
        })
    }

    /// Two-state on/off Markov process leaving state 0 at rate `a` and state 1
    /// at rate `b`, built with self-transition probability `p_stay` so that
    /// every entry of `P` is positive. Effective switching rates are `a` and
    /// `b` regardless of `p_stay`.
    pub fn on_off_markov(a: f64, b: f64, p_stay: f64) -> Result<Self> {
        if !(p_stay > 0.0 && p_stay < 1.0) {
            return Err(Error::Argument(format!("p_stay = {p_stay} must lie in (0, 1)")));
        }
        let q = 1.0 - p_stay;
        SemiMarkovSpec::new(
            vec![0, 1],
            vec![vec![p_stay, q], vec![q, p_stay]],
            vec![
                SojournLaw::Exponential { rate: a / q },
                SojournLaw::Exponential { rate: b / q },
            ],
        )
    }

    pub fn states(&self) -> &[i64] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn embedded_matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn laws(&self) -> &[SojournLaw] {
        &self.laws
    }

    pub fn law(&self, index: usize) -> &SojournLaw {
        &self.laws[index]
    }

    pub fn zero_index(&self) -> usize {
        self.zero_index
    }

    pub fn index_of(&self, state: i64) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    /// Tail index of the inactive state, `None` when its law is thin-tailed.
    pub fn tail_index(&self) -> Option<f64> {
        self.laws[self.zero_index].tail_index()
    }

    /// Hurst index of the aggregate limit: `(3 - α) / 2`, or `1/2` when the
    /// inactive state is thin-tailed.
    pub fn limit_hurst(&self) -> f64 {
        match self.tail_index() {
            Some(alpha) => hurst_from_alpha(alpha).expect("validated at construction"),
            None => 0.5,
        }
    }

    /// Stationary law of the embedded chain.
    pub fn embedded_stationary(&self) -> &[f64] {
        &self.embedded
    }

    /// Long-run number of jumps per unit time, `1 / Σ π_i m_i`.
    pub fn jump_rate(&self) -> f64 {
        1.0 / self.embedded.iter().zip(&self.laws).map(|(p, l)| p * l.mean()).sum::<f64>()
    }

    /// Long-run fraction of time spent in each state (indexed like `states`).
    pub fn occupation(&self) -> &[f64] {
        &self.occupation
    }

    /// `E_ν[x]`.
    pub fn stationary_mean(&self) -> f64 {
        self.occupation.iter().zip(&self.states).map(|(p, &s)| p * s as f64).sum()
    }

    pub fn next_index<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        sample_cumulative(&self.cumulative[from], rng)
    }

    /// Initial `(state index, residual sojourn)` of the stationary process.
    pub fn stationary_init<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let mut acc = 0.0;
        let cum: Vec<f64> = self
            .occupation
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let idx = sample_cumulative(&cum, rng);
        (idx, self.laws[idx].sample_residual(rng))
    }

    /// Initial `(state index, sojourn)`: stationary, or a fresh sojourn in
    /// the inactive state.
    pub fn initial<R: Rng + ?Sized>(&self, rng: &mut R, stationary: bool) -> (usize, f64) {
        if stationary {
            self.stationary_init(rng)
        } else {
            (self.zero_index, self.laws[self.zero_index].sample(rng))
        }
    }

    /// Iterator over `(start, end, state index)` sojourns, in the process's own
    /// clock, covering `[0, horizon]`.
    pub fn segments<'a, R: Rng + ?Sized>(&'a self, horizon: f64, rng: &'a mut R, stationary: bool) -> Segments<'a, R> {
        let (idx, first) = self.initial(rng, stationary);
        Segments {
            spec: self,
            rng,
            horizon,
            start: 0.0,
            end: first,
            index: idx,
            done: false,
        }
    }
}

fn sample_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

pub struct Segments<'a, R: Rng + ?Sized> {
    spec: &'a SemiMarkovSpec,
    rng: &'a mut R,
    horizon: f64,
    start: f64,
    end: f64,
    index: usize,
    done: bool,
}

impl<R: Rng + ?Sized> Iterator for Segments<'_, R> {
    type Item = (f64, f64, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = (self.start, self.end.min(self.horizon), self.index);
        if self.end >= self.horizon {
            self.done = true;
        } else {
            self.index = self.spec.next_index(self.index, self.rng);
            self.start = self.end;
            self.end += self.spec.laws[self.index].sample(self.rng);
        }
        Some(item)
    }
}

pub fn occupation_law(spec: &SemiMarkovSpec) -> Vec<f64> {
    spec.occupation().to_vec()
}

pub fn stationary_init<R: Rng + ?Sized>(spec: &SemiMarkovSpec, rng: &mut R) -> (i64, f64) {
    let (idx, residual) = spec.stationary_init(rng);
    (spec.states()[idx], residual)
}

/// Piecewise-constant sample path `x_t = ξ_n` on `[T_n, T_{n+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiMarkovPath {
    pub jump_times: Vec<f64>,
    pub states: Vec<i64>,
    pub horizon: f64,
}

impl SemiMarkovPath {
    pub fn state_at(&self, t: f64) -> i64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.states[k.saturating_sub(1)]
    }

    /// Fraction of `[0, horizon]` spent in each of `states`.
    pub fn occupation_fractions(&self, states: &[i64]) -> Vec<f64> {
        let mut time = vec![0.0; states.len()];
        for (k, &s) in self.states.iter().enumerate() {
            let end = self.jump_times.get(k + 1).copied().unwrap_or(self.horizon);
            if let Some(i) = states.iter().position(|&x| x == s) {
                time[i] += end - self.jump_times[k];
            }
        }
        time.iter().map(|t| t / self.horizon).collect()
    }

    /// Path values at `0, dt, 2dt, ...` up to the horizon.
    pub fn sample_grid(&self, dt: f64) -> Vec<f64> {
        let n = (self.horizon / dt + 1e-9).floor() as usize;
        let mut out = Vec::with_capacity(n + 1);
        let mut k = 0;
        for i in 0..=n {
            let t = i as f64 * dt;
            while k + 1 < self.jump_times.len() && self.jump_times[k + 1] <= t {
                k += 1;
            }
            out.push(self.states[k] as f64);
        }
        out
    }
}

pub fn simulate<R: Rng + ?Sized>(spec: &SemiMarkovSpec, horizon: f64, rng: &mut R, stationary: bool) -> Result<SemiMarkovPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain {
            quantity: "horizon",
            value: horizon,
            domain: "(0, ∞)",
        });
    }
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    for (start, _, idx) in spec.segments(horizon, rng, stationary) {
        jump_times.push(start);
        states.push(spec.states()[idx]);
    }
    Ok(SemiMarkovPath {
        jump_times,
        states,
        horizon,
    })
}
