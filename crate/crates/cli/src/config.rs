//! Run configuration: JSON file sections `model`, `policy`, `output`,
//! overridden field by field from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spsc_core::prey_predator::PreyPredatorConfig;
use spsc_core::sample_size::{DEFAULT_ALPHA, DEFAULT_EPSILON, DEFAULT_N0};
use spsc_core::spsc::{SpscConfig, DEFAULT_STAGES};
use spsc_core::partition::DEFAULT_K;

/// Full-scale campaign sizes and their desk-scale (`--ci-mode`) variants.
pub const FULL_REPEATS: usize = 1000;
pub const FULL_BASELINE: usize = 30_000;
pub const CI_REPEATS: usize = 200;
pub const CI_BASELINE: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    pub n: usize,
    pub horizon: u64,
    pub stages: usize,
    pub clusters: usize,
    pub seed: u64,
    pub repeats: Option<usize>,
    pub epsilon: f64,
    pub alpha: f64,
    pub n0: usize,
    pub baseline_reps: Option<usize>,
    pub ci_mode: bool,
    pub standardize: bool,
    /// Reference probabilities for `compare`, one per solution.
    pub references: Option<Vec<f64>>,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            n: 50,
            horizon: 1000,
            stages: DEFAULT_STAGES,
            clusters: DEFAULT_K,
            seed: 0,
            repeats: None,
            epsilon: DEFAULT_EPSILON,
            alpha: DEFAULT_ALPHA,
            n0: DEFAULT_N0,
            baseline_reps: None,
            ci_mode: false,
            standardize: false,
            references: None,
        }
    }
}

impl PolicySection {
    pub fn repeats(&self) -> usize {
        self.repeats.unwrap_or(if self.ci_mode { CI_REPEATS } else { FULL_REPEATS })
    }

    pub fn baseline_reps(&self) -> usize {
        self.baseline_reps.unwrap_or(if self.ci_mode { CI_BASELINE } else { FULL_BASELINE })
    }

    pub fn spsc(&self) -> SpscConfig {
        SpscConfig {
            n: self.n,
            stages: self.stages,
            k: self.clusters,
            horizon: self.horizon,
            master_seed: self.seed,
            standardize: self.standardize,
            ..SpscConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: PreyPredatorConfig,
    pub policy: PolicySection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<(), String> {
        self.model.validate().map_err(|e| e.to_string())?;
        let p = &self.policy;
        p.spsc().validate().map_err(|e| e.to_string())?;
        if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
            return Err(format!("epsilon = {} must be positive", p.epsilon));
        }
        if !(p.alpha > 0.0 && p.alpha < 1.0) {
            return Err(format!("alpha = {} must lie in (0,1)", p.alpha));
        }
        if p.n0 < 2 {
            return Err("n0 must be at least 2".into());
        }
        if p.repeats() < 2 {
            return Err("repeats must be at least 2".into());
        }
        if p.baseline_reps() == 0 {
            return Err("baseline-reps must be positive".into());
        }
        if let Some(refs) = &p.references {
            if refs.len() != 3 || refs.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
                return Err("references need three values in (0,1]".into());
            }
        }
        Ok(())
    }
}
