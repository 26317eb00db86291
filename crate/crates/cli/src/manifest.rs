//! One JSON record per output directory describing how it was produced.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentKind;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Quantities that do not apply to a kind are recorded as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ExperimentKind,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub seed: u64,
    pub ensemble_size: usize,
    pub n_agents: Option<usize>,
    pub time_scale: Option<f64>,
    pub alpha: Option<f64>,
    pub hurst: Option<f64>,
    pub hurst_estimate_median: Option<f64>,
    pub sigma_estimate: Option<f64>,
    pub event_count: Option<u64>,
    pub median_sup_error: Option<f64>,
    pub convergence_slope: Option<f64>,
    pub convergence_slope_stderr: Option<f64>,
    pub terminal_mean: Option<f64>,
    pub terminal_variance: Option<f64>,
    /// Paths relative to the output directory, in write order.
    pub files: Vec<String>,
    pub version: String,
    /// Excluded from the determinism contract.
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(kind: ExperimentKind, config_hash: String, seed: u64, ensemble_size: usize) -> Self {
        Self {
            kind,
            config_hash,
            seed,
            ensemble_size,
            n_agents: None,
            time_scale: None,
            alpha: None,
            hurst: None,
            hurst_estimate_median: None,
            sigma_estimate: None,
            event_count: None,
            median_sup_error: None,
            convergence_slope: None,
            convergence_slope_stderr: None,
            terminal_mean: None,
            terminal_variance: None,
            files: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// The manifest with `wall_time_s` zeroed, for reproducibility checks.
    pub fn without_wall_time(&self) -> Manifest {
        Manifest {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}
