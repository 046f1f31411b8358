//! Experiment configuration: every tunable constant of the geometric
//! measurements in one serializable record.
//!
//! The defaults follow the source construction where it pins a value
//! (scale base `δ = 1/4`, block exponent `1/45`, pair exponent `1/90`,
//! ratio/scale/final exponents `1/18`, `1/216`, `1/1080`) and otherwise
//! record calibration choices (`γ = 1`, budget constants `c1 = 4`,
//! `c2 = 8`). These parameterize searches and reports, never assertions.

use crate::collapse::CollapseParams;
use crate::scale::ScaleConsts;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config field {field} = {value} is outside its domain: {domain}")]
    OutOfRange { field: &'static str, value: f64, domain: &'static str },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse: {0}")]
    Json(#[from] serde_json::Error),
}

/// All tunable constants of the workbench. Serializable so every run
/// manifest can embed the exact configuration it used.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Scale base for length classes and scale selection, in `(0, 1/2)`.
    pub delta: f64,
    /// Class-weight budget constant: scale `j` is admissible when
    /// `W_j ≤ scale_c1·δ·total`.
    pub scale_c1: f64,
    /// Center budget constant: `y` is admissible when the local class
    /// mass is `≤ scale_c2·δ^{4j+1}·total`.
    pub scale_c2: f64,
    /// Kinematic calibration constant; only perimeter ratios are ever
    /// asserted, so this rescales reports without touching tests.
    pub gamma: f64,
    /// Height of the second segment endpoint `u = (0, 0, u_height)`.
    pub u_height: f64,
    /// Collapse search: neighborhood radius exponent (`ε^exp_nbhd`).
    pub exp_nbhd: f64,
    /// Collapse search: block count exponent (`n ≈ ε^{-exp_block}`).
    pub exp_block: f64,
    /// Recorded pair-separation exponent (`r ≈ ε^exp_pair` in reports).
    pub exp_pair: f64,
    /// Recorded ratio exponent for trend summaries.
    pub exp_ratio: f64,
    /// Recorded scale exponent for trend summaries.
    pub exp_scale: f64,
    /// Recorded final-bound exponent for trend summaries.
    pub exp_final: f64,
    /// Stability constant `a` echoed into reports.
    pub stability_a: f64,
    /// Rate constant `K` echoed into reports.
    pub rate_k: f64,
    /// Allowed excess over 1 when validating Lipschitz preconditions.
    pub lipschitz_tol: f64,
    /// Sampled pairs per Lipschitz validation.
    pub lipschitz_pairs: usize,
    /// Seeded base pairs in the segment-partition collapse search.
    pub collapse_bases: usize,
    /// Parameter samples per block in the segment-partition search.
    pub collapse_block_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            delta: 0.25,
            scale_c1: 4.0,
            scale_c2: 8.0,
            gamma: 1.0,
            u_height: 1.0 / 9.0,
            exp_nbhd: 1.0 / 9.0,
            exp_block: 1.0 / 45.0,
            exp_pair: 1.0 / 90.0,
            exp_ratio: 1.0 / 18.0,
            exp_scale: 1.0 / 216.0,
            exp_final: 1.0 / 1080.0,
            stability_a: 1.0,
            rate_k: 2.5,
            lipschitz_tol: 1e-9,
            lipschitz_pairs: 2000,
            collapse_bases: 8,
            collapse_block_samples: 3,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&'static str, f64, bool, &'static str); 7] = [
            ("delta", self.delta, self.delta > 0.0 && self.delta < 0.5, "(0, 1/2)"),
            ("scale_c1", self.scale_c1, self.scale_c1 > 0.0, "positive"),
            ("scale_c2", self.scale_c2, self.scale_c2 > 0.0, "positive"),
            ("gamma", self.gamma, self.gamma > 0.0, "positive"),
            ("u_height", self.u_height, self.u_height > 0.0, "positive"),
            (
                "exp_block",
                self.exp_block,
                self.exp_block > 0.0 && self.exp_block < 1.0,
                "(0, 1)",
            ),
            (
                "lipschitz_tol",
                self.lipschitz_tol,
                self.lipschitz_tol >= 0.0,
                "nonnegative",
            ),
        ];
        for (field, value, ok, domain) in checks {
            if !ok || !value.is_finite() {
                return Err(ConfigError::OutOfRange { field, value, domain });
            }
        }
        Ok(())
    }

    pub fn scale_consts(&self) -> ScaleConsts {
        ScaleConsts { c1: self.scale_c1, c2: self.scale_c2 }
    }

    pub fn collapse_params(&self) -> CollapseParams {
        CollapseParams {
            u_height: self.u_height,
            exp_nbhd: self.exp_nbhd,
            exp_block: self.exp_block,
            bases: self.collapse_bases,
            block_samples: self.collapse_block_samples,
            lipschitz_tol: self.lipschitz_tol,
            lipschitz_pairs: self.lipschitz_pairs,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read(path)?;
        let cfg: ExperimentConfig = serde_json::from_slice(&raw)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}
