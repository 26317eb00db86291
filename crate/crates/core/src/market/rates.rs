//! Separable order-rate functions `λ±(x, s) = f(x) g±(s) + h±(s)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semi_markov::{InvariantCheck, SemiMarkovSpec};

const VALIDATION_POINTS: usize = 201;

/// Smooth scalar function of the log-price, with its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFn {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `amplitude / (1 + exp(steepness * (s - center)))`.
    Logistic {
        amplitude: f64,
        steepness: f64,
        center: f64,
    },
    /// `intercept + slope * s`, clamped to `[lo, hi]`.
    Clamped {
        intercept: f64,
        slope: f64,
        lo: f64,
        hi: f64,
    },
}

impl ScalarFn {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Constant { value } => value,
            ScalarFn::Affine { intercept, slope } => intercept + slope * s,
            ScalarFn::Logistic {
                amplitude,
                steepness,
                center,
            } => amplitude / (1.0 + (steepness * (s - center)).exp()),
            ScalarFn::Clamped { intercept, slope, lo, hi } => (intercept + slope * s).clamp(lo, hi),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            ScalarFn::Zero | ScalarFn::Constant { .. } => 0.0,
            ScalarFn::Affine { slope, .. } => slope,
            ScalarFn::Logistic {
                amplitude,
                steepness,
                center,
            } => {
                let e = (steepness * (s - center)).exp();
                if e.is_infinite() {
                    0.0
                } else {
                    -amplitude * steepness * e / ((1.0 + e) * (1.0 + e))
                }
            }
            ScalarFn::Clamped { intercept, slope, lo, hi } => {
                let v = intercept + slope * s;
                if v > lo && v < hi {
                    slope
                } else {
                    0.0
                }
            }
        }
    }
}

fn default_price_range() -> [f64; 2] {
    [-5.0, 5.0]
}

/// Serialized form of a [`RateSpec`]; `f` is listed in semi-Markov state order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateDef {
    pub f: Vec<f64>,
    #[serde(default)]
    pub g_plus: ScalarFn,
    #[serde(default)]
    pub g_minus: ScalarFn,
    #[serde(default)]
    pub h_plus: ScalarFn,
    #[serde(default)]
    pub h_minus: ScalarFn,
    /// Declared uniform bound on `λ±`.
    pub rate_bound: f64,
    /// Declared bound on `|∂λ±/∂s|`.
    pub lipschitz: f64,
    #[serde(default = "default_price_range")]
    pub price_range: [f64; 2],
}

impl RateDef {
    fn rate(&self, x: usize, s: f64, plus: bool) -> f64 {
        let (g, h) = if plus {
            (&self.g_plus, &self.h_plus)
        } else {
            (&self.g_minus, &self.h_minus)
        };
        self.f[x] * g.eval(s) + h.eval(s)
    }

    fn rate_derivative(&self, x: usize, s: f64, plus: bool) -> f64 {
        let (g, h) = if plus {
            (&self.g_plus, &self.h_plus)
        } else {
            (&self.g_minus, &self.h_minus)
        };
        self.f[x] * g.derivative(s) + h.derivative(s)
    }

    /// Evaluates every rate invariant against the states and occupation law
    /// of `spec`.
    pub fn check_invariants(&self, spec: &SemiMarkovSpec) -> Vec<InvariantCheck> {
        let mut checks = Vec::new();
        let f_ok = self.f.len() == spec.len();
        checks.push(InvariantCheck::new(
            "f defined for every state",
            f_ok,
            format!("{} values for {} states", self.f.len(), spec.len()),
        ));
        if !f_ok {
            return checks;
        }
        checks.push(InvariantCheck::new(
            "declared bounds positive",
            self.rate_bound > 0.0 && self.lipschitz >= 0.0 && self.price_range[0] < self.price_range[1],
            format!(
                "rate_bound {}, lipschitz {}, price_range {:?}",
                self.rate_bound, self.lipschitz, self.price_range
            ),
        ));

        let [lo, hi] = self.price_range;
        let mut min_rate = f64::INFINITY;
        let mut max_rate = f64::NEG_INFINITY;
        let mut max_slope = 0.0_f64;
        for k in 0..VALIDATION_POINTS {
            let s = lo + (hi - lo) * k as f64 / (VALIDATION_POINTS - 1) as f64;
            for x in 0..self.f.len() {
                for plus in [true, false] {
                    let r = self.rate(x, s, plus);
                    min_rate = min_rate.min(r);
                    max_rate = max_rate.max(r);
                    max_slope = max_slope.max(self.rate_derivative(x, s, plus).abs());
                }
            }
        }
        checks.push(InvariantCheck::new(
            "λ± ≥ 0 on price range",
            min_rate >= -1e-12,
            format!("min rate {min_rate}"),
        ));
        checks.push(InvariantCheck::new(
            "λ± bounded by declared bound",
            max_rate <= self.rate_bound * (1.0 + 1e-12),
            format!("max rate {max_rate} vs bound {}", self.rate_bound),
        ));
        checks.push(InvariantCheck::new(
            "|∂λ±/∂s| bounded by declared L",
            max_slope <= self.lipschitz * (1.0 + 1e-9) + 1e-12,
            format!("max |∂λ/∂s| {max_slope} vs L {}", self.lipschitz),
        ));

        let mut sorted = self.f.clone();
        sorted.sort_by(f64::total_cmp);
        let injective = sorted.windows(2).all(|w| w[0] != w[1]);
        checks.push(InvariantCheck::new(
            "f one-to-one",
            injective,
            format!("f = {:?}", self.f),
        ));
        let f0 = self.f[spec.zero_index()];
        let mean_f: f64 = spec.occupation().iter().zip(&self.f).map(|(p, v)| p * v).sum();
        checks.push(InvariantCheck::new(
            SEPARABILITY_NON_DEGENERATE,
            (f0 - mean_f).abs() > 1e-12 * (1.0 + f0.abs()),
            format!("f(0) = {f0}, E_ν f(x) = {mean_f}"),
        ));
        checks
    }
}

/// Name of the check `f(0) ≠ E_ν f(x)` required for the fractional limit.
pub const SEPARABILITY_NON_DEGENERATE: &str = "separability non-degeneracy f(0) ≠ E_ν f(x)";
const SEPARABILITY_CHECKS: [&str; 2] = ["f one-to-one", SEPARABILITY_NON_DEGENERATE];

/// Validated rate functions bound to a semi-Markov state space.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSpec {
    def: RateDef,
    f0: f64,
    mean_f: f64,
    separable: bool,
}

impl RateSpec {
    /// Enforces every invariant, including the separability conditions.
    pub fn new(def: RateDef, spec: &SemiMarkovSpec) -> Result<Self> {
        Self::build(def, spec, true)
    }

    /// Enforces positivity, bound and Lipschitz invariants only. Suitable for
    /// the fluid and Gaussian limits, which do not need `f` to be injective or
    /// non-degenerate.
    pub fn without_separability(def: RateDef, spec: &SemiMarkovSpec) -> Result<Self> {
        Self::build(def, spec, false)
    }

    fn build(def: RateDef, spec: &SemiMarkovSpec, strict: bool) -> Result<Self> {
        let checks = def.check_invariants(spec);
        let mut separable = true;
        for c in checks.iter().filter(|c| !c.passed) {
            if SEPARABILITY_CHECKS.contains(&c.name) {
                separable = false;
                if !strict {
                    continue;
                }
            }
            return Err(Error::invariant(c.name, c.detail.clone()));
        }
        let f0 = def.f[spec.zero_index()];
        let mean_f = spec.occupation().iter().zip(&def.f).map(|(p, v)| p * v).sum();
        Ok(Self {
            def,
            f0,
            mean_f,
            separable,
        })
    }

    pub fn def(&self) -> &RateDef {
        &self.def
    }

    pub fn f(&self) -> &[f64] {
        &self.def.f
    }

    pub fn is_separable(&self) -> bool {
        self.separable
    }

    pub fn require_separable(&self) -> Result<()> {
        if self.separable {
            Ok(())
        } else {
            Err(Error::invariant(
                SEPARABILITY_NON_DEGENERATE,
                format!("f must be one-to-one with f(0) = {} ≠ E_ν f(x) = {}", self.f0, self.mean_f),
            ))
        }
    }

    /// `E_ν f(x)`.
    pub fn mean_f(&self) -> f64 {
        self.mean_f
    }

    pub fn rate_bound(&self) -> f64 {
        self.def.rate_bound
    }

    pub fn plus(&self, x: usize, s: f64) -> f64 {
        self.def.rate(x, s, true)
    }

    pub fn minus(&self, x: usize, s: f64) -> f64 {
        self.def.rate(x, s, false)
    }

    /// Net order rate `λ = λ+ - λ-`.
    pub fn net(&self, x: usize, s: f64) -> f64 {
        self.plus(x, s) - self.minus(x, s)
    }

    pub fn plus_derivative(&self, x: usize, s: f64) -> f64 {
        self.def.rate_derivative(x, s, true)
    }

    pub fn minus_derivative(&self, x: usize, s: f64) -> f64 {
        self.def.rate_derivative(x, s, false)
    }

    /// `g = g+ - g-`, the state-sensitive part of the net rate.
    pub fn g(&self, s: f64) -> f64 {
        self.def.g_plus.eval(s) - self.def.g_minus.eval(s)
    }

    /// Total buy and sell rates of a population with `Σ f(x^a) = f_sum` over
    /// `n` agents.
    pub fn aggregate(&self, f_sum: f64, n: f64, s: f64) -> (f64, f64) {
        let d = &self.def;
        let plus = f_sum * d.g_plus.eval(s) + n * d.h_plus.eval(s);
        let minus = f_sum * d.g_minus.eval(s) + n * d.h_minus.eval(s);
        (plus.max(0.0), minus.max(0.0))
    }

    /// Whether `λ±(0, s) ≡ 0`: the inactive state places no orders.
    pub fn silent_when_inactive(&self) -> bool {
        self.f0 == 0.0 && self.def.h_plus == ScalarFn::Zero && self.def.h_minus == ScalarFn::Zero
    }
}
