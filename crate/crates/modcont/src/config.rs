//! Run configuration for the command-line entry points.
//!
//! One JSON document with a section per command; command-line flags are
//! applied on top by the caller.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::ExperimentConfig;
use crate::verifier::{GridSpec, HypProfile, InequalityParams, MarchConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    /// `THM2`, `THM3`, `THM4_CRIT`, `THM4_SUPER` or `HYP1`.
    pub kind: String,
    pub params: InequalityParams,
    pub grid: GridSpec,
    /// Search the smallest certifying constant instead of checking the given one.
    pub certify: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            kind: "THM3".into(),
            params: InequalityParams::default(),
            grid: GridSpec::default(),
            certify: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisConfig {
    pub profile: HypProfile,
    pub lambda0: f64,
    pub march: MarchConfig,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig {
            // 2·tanh(ξ/4) is stationary when C_d = 0
            profile: HypProfile::Tanh {
                amp: 2.0,
                rate: 0.25,
            },
            lambda0: std::f64::consts::E,
            march: MarchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Cells over `(alpha, beta)` applied to the verify section.
    Verify,
    /// Cells over scenarios and resolutions applied to the simulate section.
    #[default]
    Simulate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub scenarios: Vec<String>,
    /// Empty keeps the scenario default.
    pub resolutions: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            mode: SweepMode::Simulate,
            alphas: vec![1.0],
            betas: vec![0.5],
            scenarios: vec![
                "burgers".into(),
                "burgers-hilbert".into(),
                "fractal-burgers".into(),
            ],
            resolutions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub verify: VerifyConfig,
    pub simulate: ExperimentConfig,
    pub sweep: SweepConfig,
    pub hypothesis: HypothesisConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("out"),
            threads: None,
            verify: VerifyConfig::default(),
            simulate: ExperimentConfig::default(),
            sweep: SweepConfig::default(),
            hypothesis: HypothesisConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run config: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Simulation cells or verification cells of the sweep section.
    pub fn sweep_cells(&self) -> (Vec<VerifyConfig>, Vec<ExperimentConfig>) {
        match self.sweep.mode {
            SweepMode::Verify => {
                let mut cells = Vec::new();
                for &alpha in &self.sweep.alphas {
                    for &beta in &self.sweep.betas {
                        let mut v = self.verify.clone();
                        v.params.alpha = alpha;
                        v.params.beta = beta;
                        cells.push(v);
                    }
                }
                (cells, Vec::new())
            }
            SweepMode::Simulate => {
                let resolutions: Vec<Option<usize>> = if self.sweep.resolutions.is_empty() {
                    vec![self.simulate.n]
                } else {
                    self.sweep.resolutions.iter().map(|&n| Some(n)).collect()
                };
                let mut cells = Vec::new();
                for s in &self.sweep.scenarios {
                    for &n in &resolutions {
                        cells.push(ExperimentConfig {
                            scenario: s.clone(),
                            n,
                            seed: self.seed,
                            ..self.simulate.clone()
                        });
                    }
                }
                (Vec::new(), cells)
            }
        }
    }
}
