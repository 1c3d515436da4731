//! Toolkit-wide configuration file. Every command-line flag maps onto a
//! field here; flags override the file, and the merged result is written
//! next to each command's outputs as `effective_config.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fgd_core::benchmark::BenchmarkConfig;
use fgd_core::blink::BlinkConfig;
use fgd_core::eval::EvalConfig;
use fgd_core::methods::{MethodId, MethodSettings};
use fgd_core::pipeline::{FgdConfig, WaveletSettings};
use fgd_core::reconstruct::ReconstructConfig;
use fgd_core::saccade::DetectConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolkitConfig {
    pub blink: BlinkConfig,
    pub detect: DetectConfig,
    pub reconstruct: ReconstructConfig,
    /// Wavelet stage of the feature-guided pipeline.
    pub fgd: WaveletSettings,
    /// Comparison methods.
    pub methods: MethodSettings,
    pub eval: EvalConfig,
    /// Synthetic corpus generation.
    pub sim: BenchmarkConfig,
    pub io: IoConfig,
    pub run: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    /// Sampling rate forced onto loaded signals; inferred from `t_s` when unset.
    pub fs_hz: Option<f64>,
    pub diagnostics_dir: Option<PathBuf>,
    /// De-drifted signal and reference gaze the `evaluate` regression is
    /// fitted on; the evaluated signal itself when unset.
    pub fit_signal: Option<PathBuf>,
    pub fit_reference: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub method: MethodId,
    pub compare_methods: Vec<MethodId>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: MethodId::Fgd,
            compare_methods: MethodId::ALL.to_vec(),
        }
    }
}

impl ToolkitConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn fgd_config(&self) -> FgdConfig {
        FgdConfig {
            detect: self.detect,
            reconstruct: self.reconstruct,
            wavelet: self.fgd,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        self.blink.validate()?;
        self.detect.validate()?;
        self.reconstruct.validate()?;
        self.eval.validate()?;
        self.sim.script.validate()?;
        if self.sim.n_scenarios == 0 {
            return Err(CliError::Usage("n_scenarios must be at least 1".into()));
        }
        if self.run.compare_methods.is_empty() {
            return Err(CliError::Usage("no methods to compare".into()));
        }
        if let Some(fs) = self.io.fs_hz {
            if !(fs > 0.0 && fs.is_finite()) {
                return Err(CliError::Usage("fs_hz must be positive".into()));
            }
        }
        if self.io.fit_signal.is_some() != self.io.fit_reference.is_some() {
            return Err(CliError::Usage("fit_signal and fit_reference go together".into()));
        }
        Ok(())
    }
}
