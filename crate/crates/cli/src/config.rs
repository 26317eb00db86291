//! Experiment configuration: a TOML file with one top-level `kind` and the
//! sections that kind needs.
//!
//! ```toml
//! kind = "fbm"
//! seed = 7
//! ensemble_size = 1
//!
//! [fbm]
//! hurst = 0.75
//! n_steps = 16384
//! ```

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use inertia_core::market::{CoefficientLaw, Elasticity, MarketParams, RateDef, ScalarFn};
use inertia_core::semi_markov::SemiMarkovDef;
use inertia_core::stats::HurstMethod;
use inertia_core::SemiMarkovSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fluid,
    Feedback,
    NoFeedback,
    Fbm,
    Fou,
    Hurst,
    Convergence,
    Fracvol,
    Randcoeff,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::Fluid,
        ExperimentKind::Feedback,
        ExperimentKind::NoFeedback,
        ExperimentKind::Fbm,
        ExperimentKind::Fou,
        ExperimentKind::Hurst,
        ExperimentKind::Convergence,
        ExperimentKind::Fracvol,
        ExperimentKind::Randcoeff,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fluid => "fluid",
            ExperimentKind::Feedback => "feedback",
            ExperimentKind::NoFeedback => "no_feedback",
            ExperimentKind::Fbm => "fbm",
            ExperimentKind::Fou => "fou",
            ExperimentKind::Hurst => "hurst",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::Fracvol => "fracvol",
            ExperimentKind::Randcoeff => "randcoeff",
        }
    }

    /// Sections that must be present for this kind.
    pub fn required_sections(self) -> &'static [&'static str] {
        match self {
            ExperimentKind::Fluid => &["semi_markov", "rates", "fluid"],
            ExperimentKind::Feedback => &["semi_markov", "rates", "market"],
            ExperimentKind::NoFeedback => &["semi_markov", "market"],
            ExperimentKind::Fbm => &["fbm"],
            ExperimentKind::Fou => &["semi_markov", "rates", "market", "fou"],
            ExperimentKind::Hurst => &["hurst"],
            ExperimentKind::Convergence => &["semi_markov", "rates", "convergence"],
            ExperimentKind::Fracvol => &["fracvol"],
            ExperimentKind::Randcoeff => &["randcoeff"],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

fn fine_step() -> f64 {
    1.0 / 1024.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidSection {
    #[serde(default)]
    pub s0: f64,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "fine_step")]
    pub dt: f64,
}

fn constant_elasticity() -> Elasticity {
    Elasticity::Constant { value: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoFeedbackSection {
    #[serde(default = "constant_elasticity")]
    pub elasticity: Elasticity,
    /// Wavelet octaves for the per-path Hurst estimate; the estimator's
    /// default range when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub octaves: Option<[u32; 2]>,
}

impl Default for NoFeedbackSection {
    fn default() -> Self {
        Self {
            elasticity: constant_elasticity(),
            octaves: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbmSection {
    pub hurst: f64,
    pub n_steps: usize,
    #[serde(default = "unit")]
    pub horizon: f64,
}

fn sigma_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FouSection {
    /// Defaults to `(3 - α)/2` from the inactive sojourn law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<f64>,
    /// Fixed `σ`; estimated by variance matching when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "sigma_samples")]
    pub sigma_samples: usize,
}

fn all_methods() -> Vec<HurstMethod> {
    vec![HurstMethod::Wavelet, HurstMethod::Dfa, HurstMethod::RescaledRange]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HurstSection {
    /// Hurst index of the synthetic fBm paths being estimated.
    pub hurst: f64,
    pub n_steps: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<HurstMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// Agent counts; `ensemble_size` seeds are run for each.
    pub sizes: Vec<usize>,
    #[serde(default = "unit")]
    pub horizon: f64,
    #[serde(default = "fine_step")]
    pub grid_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracvolSection {
    pub rate_plus: ScalarFn,
    pub rate_minus: ScalarFn,
    pub time_scale: f64,
    pub hurst: f64,
    pub n_steps: usize,
    #[serde(default = "unit")]
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandcoeffSection {
    pub law: CoefficientLaw,
    pub n_steps: usize,
    #[serde(default)]
    pub s0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Master seed; there is no wall-clock fallback.
    pub seed: u64,
    #[serde(default = "one")]
    pub ensemble_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_markov: Option<SemiMarkovDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub no_feedback: Option<NoFeedbackSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fbm: Option<FbmSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fou: Option<FouSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hurst: Option<HurstSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fracvol: Option<FracvolSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub randcoeff: Option<RandcoeffSection>,
}

/// Outcome of one named configuration check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        if self.detail.is_empty() {
            write!(f, "{tag} {}", self.name)
        } else {
            write!(f, "{tag} {} ({})", self.name, self.detail)
        }
    }
}

fn core_checks(out: &mut Vec<Check>, checks: Vec<inertia_core::semi_markov::InvariantCheck>) {
    out.extend(checks.into_iter().map(|c| Check::new(c.name, c.passed, c.detail)));
}

fn range_check(out: &mut Vec<Check>, name: &str, value: f64, ok: bool) {
    out.push(Check::new(name, ok, format!("{value}")));
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Parse(msg) => CliError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Compact JSON with sorted keys, without `output_dir`.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.output_dir = None;
        let value = serde_json::to_value(&copy).expect("config serializes");
        serde_json::to_string(&value).expect("json value serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    fn section_present(&self, name: &str) -> bool {
        match name {
            "semi_markov" => self.semi_markov.is_some(),
            "rates" => self.rates.is_some(),
            "market" => self.market.is_some(),
            "fluid" => self.fluid.is_some(),
            "no_feedback" => self.no_feedback.is_some(),
            "fbm" => self.fbm.is_some(),
            "fou" => self.fou.is_some(),
            "hurst" => self.hurst.is_some(),
            "convergence" => self.convergence.is_some(),
            "fracvol" => self.fracvol.is_some(),
            "randcoeff" => self.randcoeff.is_some(),
            _ => false,
        }
    }

    /// Every invariant the configuration can be checked against without
    /// running it. Later checks are skipped when the sections they depend on
    /// are missing or malformed.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        out.push(Check::new("ensemble_size ≥ 1", self.ensemble_size >= 1, format!("{}", self.ensemble_size)));
        for section in self.kind.required_sections() {
            out.push(Check::new(
                format!("section [{section}] present"),
                self.section_present(section),
                format!("required by kind {}", self.kind),
            ));
        }

        let mut spec = None;
        if let Some(def) = &self.semi_markov {
            let checks = def.check_invariants();
            let ok = checks.iter().all(|c| c.passed);
            core_checks(&mut out, checks);
            if ok {
                match SemiMarkovSpec::try_from(def.clone()) {
                    Ok(s) => spec = Some(s),
                    Err(e) => out.push(Check::new("semi-Markov spec builds", false, e.to_string())),
                }
            }
        }
        if let (Some(rates), Some(spec)) = (&self.rates, &spec) {
            core_checks(&mut out, rates.check_invariants(spec));
        }
        if let Some(market) = &self.market {
            let result = market.validate();
            let name = match &result {
                Err(inertia_core::Error::Invariant { name, .. }) => name.to_string(),
                Err(_) => "market grid".into(),
                Ok(()) => "market parameters valid".into(),
            };
            out.push(Check::new(name, result.is_ok(), result.err().map(|e| e.to_string()).unwrap_or_default()));
        }
        self.kind_checks(&mut out, spec.as_ref());
        out
    }

    fn kind_checks(&self, out: &mut Vec<Check>, spec: Option<&SemiMarkovSpec>) {
        if let Some(f) = &self.fluid {
            range_check(out, "fluid dt ≤ 1e-2", f.dt, f.dt > 0.0 && f.dt <= 1e-2);
            range_check(out, "fluid horizon > 0", f.horizon, f.horizon > 0.0 && f.horizon.is_finite());
        }
        if let (Some(nf), Some(market)) = (&self.no_feedback, &self.market) {
            if let Some([lo, hi]) = nf.octaves {
                let n = market.grid_steps();
                out.push(Check::new(
                    "wavelet octaves fit the grid",
                    lo >= 1 && lo < hi && hi + 2 < usize::BITS && n >= 1usize << (hi + 2),
                    format!("[{lo}, {hi}] with {n} grid steps"),
                ));
            }
            if let Elasticity::Constant { value } = nf.elasticity {
                range_check(out, "constant elasticity finite", value, value.is_finite());
            }
        }
        if let Some(f) = &self.fbm {
            range_check(out, "fBm H ∈ (0,1]", f.hurst, f.hurst > 0.0 && f.hurst <= 1.0);
            out.push(Check::new("fBm n_steps ≥ 2", f.n_steps >= 2, format!("{}", f.n_steps)));
            range_check(out, "fBm horizon > 0", f.horizon, f.horizon > 0.0 && f.horizon.is_finite());
        }
        if let Some(f) = &self.fou {
            let h = f.hurst.or(spec.map(|s| s.limit_hurst()));
            if let Some(h) = h {
                range_check(out, "fOU H ∈ [1/2,1)", h, (0.5..1.0).contains(&h));
            }
            if let Some(sigma) = f.sigma {
                range_check(out, "σ ≥ 0", sigma, sigma >= 0.0 && sigma.is_finite());
            } else {
                out.push(Check::new(
                    "σ matching samples ≥ 2",
                    f.sigma_samples >= 2,
                    format!("{}", f.sigma_samples),
                ));
            }
            if let Some(market) = &self.market {
                range_check(out, "fluid dt ≤ 1e-2", market.grid_step, market.grid_step <= 1e-2);
            }
        }
        if let Some(h) = &self.hurst {
            range_check(out, "fBm H ∈ (0,1]", h.hurst, h.hurst > 0.0 && h.hurst <= 1.0);
            out.push(Check::new("Hurst n_steps ≥ 256", h.n_steps >= 256, format!("{}", h.n_steps)));
            out.push(Check::new("Hurst methods listed", !h.methods.is_empty(), format!("{:?}", h.methods)));
        }
        if let Some(c) = &self.convergence {
            out.push(Check::new("convergence sizes ≥ 3", c.sizes.len() >= 3, format!("{:?}", c.sizes)));
            out.push(Check::new("convergence sizes ≥ 1", c.sizes.iter().all(|&n| n >= 1), format!("{:?}", c.sizes)));
            range_check(out, "fluid dt ≤ 1e-2", c.grid_step, c.grid_step > 0.0 && c.grid_step <= 1e-2);
            range_check(out, "convergence horizon > 0", c.horizon, c.horizon > 0.0 && c.horizon.is_finite());
        }
        if let Some(f) = &self.fracvol {
            range_check(out, "fractional-volatility H ∈ (1/2,1)", f.hurst, f.hurst > 0.5 && f.hurst < 1.0);
            range_check(out, "T > 0", f.time_scale, f.time_scale > 0.0 && f.time_scale.is_finite());
            out.push(Check::new("fractional-volatility n_steps ≥ 2", f.n_steps >= 2, format!("{}", f.n_steps)));
        }
        if let Some(r) = &self.randcoeff {
            for (name, law) in [("multiplicative", &r.law.multiplicative), ("additive", &r.law.additive)] {
                let res = law.validate();
                out.push(Check::new(
                    format!("{name} coefficient law valid"),
                    res.is_ok(),
                    res.err().map(|e| e.to_string()).unwrap_or_default(),
                ));
            }
            out.push(Check::new("random-coefficient n_steps ≥ 1", r.n_steps >= 1, format!("{}", r.n_steps)));
        }
    }

    /// Names of the failed checks, or `Ok` when every check passes.
    pub fn validate(&self) -> Result<()> {
        let failed: Vec<String> = self.checks().into_iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
        if failed.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(failed))
        }
    }
}
