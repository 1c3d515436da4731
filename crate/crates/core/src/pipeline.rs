//! The feature-guided de-drifting pipeline: detect saccades, cut them out,
//! re-level the floating segments into a continuous baseline, take the
//! baseline's wavelet approximation as the drift trend and subtract it from
//! the input.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::reconstruct::{reconstruct, FloatingSegment, ReconstructConfig};
use crate::saccade::{detect_saccades, exclude_saccades, extract_saccades, DetectConfig, SaccadeEvent};
use crate::signal::{differentiate, SampledSignal};
use crate::wavelet::{approx_trend, dedrift, dwt_multilevel, max_level, BoundaryMode, WaveletFamily};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveletSettings {
    pub level: usize,
    pub family: WaveletFamily,
    pub boundary: BoundaryMode,
}

impl Default for WaveletSettings {
    fn default() -> Self {
        Self {
            level: 7,
            family: WaveletFamily::Db4,
            boundary: BoundaryMode::Symmetric,
        }
    }
}

impl WaveletSettings {
    /// Upper edge in Hz of the approximation band at the configured level.
    pub fn approx_band_edge_hz(&self, fs_hz: f64) -> f64 {
        fs_hz / 2f64.powi(self.level as i32 + 1)
    }

    pub fn is_feasible(&self, len: usize) -> bool {
        self.level >= 1 && self.level <= max_level(len, self.family)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FgdConfig {
    pub detect: DetectConfig,
    pub reconstruct: ReconstructConfig,
    pub wavelet: WaveletSettings,
}

/// Pipeline output with all intermediates.
#[derive(Debug, Clone, PartialEq)]
pub struct FgdOutput {
    pub dedrifted: SampledSignal,
    pub trend: SampledSignal,
    pub events: Vec<SaccadeEvent>,
    pub baseline: SampledSignal,
    pub segments: Vec<FloatingSegment>,
    pub warnings: Vec<String>,
}

/// Wavelet approximation of a signal at the configured level.
pub fn wavelet_trend(signal: &SampledSignal, settings: &WaveletSettings) -> Result<SampledSignal> {
    let dec = dwt_multilevel(signal, settings.level, settings.family, settings.boundary)?;
    approx_trend(&dec, signal.len())
}

/// De-drifts a blink-free signal. Finding no saccades is not an error: the
/// baseline is then the input itself.
pub fn fgd_pipeline(raw: &SampledSignal, cfg: &FgdConfig) -> Result<FgdOutput> {
    cfg.detect.validate()?;
    cfg.reconstruct.validate()?;
    // Fail on an infeasible level before doing any work.
    if !cfg.wavelet.is_feasible(raw.len()) {
        dwt_multilevel(raw, cfg.wavelet.level, cfg.wavelet.family, cfg.wavelet.boundary)?;
    }

    let events = if cfg.detect.lag_n < raw.len() {
        let deriv = differentiate(raw, cfg.detect.lag_n)?;
        detect_saccades(&deriv, &cfg.detect)?
    } else {
        Vec::new()
    };
    let saccadic = extract_saccades(raw, &events)?;
    let excluded = exclude_saccades(raw, &saccadic)?;
    let rec = reconstruct(raw, &excluded, &events, &cfg.reconstruct)?;
    let warnings = rec.warnings();

    let trend = wavelet_trend(&rec.baseline, &cfg.wavelet)?;
    let dedrifted = dedrift(raw, &trend)?;
    Ok(FgdOutput {
        dedrifted,
        trend,
        events,
        baseline: rec.baseline,
        segments: rec.segments,
        warnings,
    })
}
