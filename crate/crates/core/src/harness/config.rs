use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of one ensemble experiment. Read from a flat JSON document;
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Time horizon t.
    pub t: f64,
    /// Bandwidths, strictly decreasing.
    pub h_list: Vec<f64>,
    pub n_paths: usize,
    pub n_steps: usize,
    /// Master seed of the per-path random streams.
    pub seed: u64,
    /// Δx = min(h_list) / bin_ratio.
    pub bin_ratio: usize,
    /// Record γ_t by both estimators.
    pub compute_gamma: bool,
    /// Record the Clark–Ocone sum for every h.
    pub compute_clark_ocone: bool,
    /// Record sup-modulus and local-time increment statistics.
    pub compute_scaling: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            t: 1.0,
            h_list: vec![0.4, 0.2, 0.1, 0.05],
            n_paths: 10_000,
            n_steps: 100_000,
            seed: 20_240_601,
            bin_ratio: 20,
            compute_gamma: false,
            compute_clark_ocone: false,
            compute_scaling: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::usage(format!("invalid config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Compact JSON of every field that influences the records. The output
    /// directory is left out so that moving a run does not change its bytes.
    pub fn embedded_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("out_dir");
        }
        v.to_string()
    }

    pub fn h_min(&self) -> f64 {
        self.h_list.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        self.h_list.iter().copied().fold(0.0, f64::max)
    }

    pub fn dx(&self) -> f64 {
        self.h_min() / self.bin_ratio as f64
    }

    pub fn ds(&self) -> f64 {
        self.t / self.n_steps as f64
    }

    /// True when Δs ≤ Δx², i.e. the bin width resolves the path's
    /// one-step fluctuations.
    pub fn is_resolved(&self) -> bool {
        self.ds() <= self.dx() * self.dx()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::usage(format!("t must be positive, got {}", self.t)));
        }
        if self.n_paths == 0 {
            return Err(Error::usage("n_paths must be at least 1"));
        }
        if self.n_steps < 2 {
            return Err(Error::usage(format!("n_steps must be at least 2, got {}", self.n_steps)));
        }
        if self.bin_ratio == 0 {
            return Err(Error::usage("bin_ratio must be at least 1"));
        }
        if self.h_list.is_empty() {
            return Err(Error::usage("h_list is empty"));
        }
        if self.h_list.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::usage(format!("h_list entries must be positive: {:?}", self.h_list)));
        }
        if self.h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::usage(format!(
                "h_list must be strictly decreasing: {:?}",
                self.h_list
            )));
        }
        let dx = self.dx();
        for &h in &self.h_list {
            let k = h / dx;
            if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
                return Err(Error::usage(format!(
                    "h = {h} is not an integer multiple of dx = {dx}"
                )));
            }
        }
        Ok(())
    }

    /// Warnings about the discretization, empty when the config is resolved.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.is_resolved() {
            out.push(format!(
                "under-resolved: sqrt(ds) = {:.4e} exceeds dx = {:.4e}",
                self.ds().sqrt(),
                self.dx()
            ));
        }
        out
    }
}
