//! Synthetic horizontal EOG trials with ground truth, and low-frequency
//! drift injection.
//!
//! A trial is a sequence of fixations on a horizontal row of targets. The
//! clean signal holds one level per fixation (gaze angle times the EOG
//! scale) joined by raised-cosine saccade ramps. White Gaussian noise and
//! optional blink pulses form the noise component; drift is a linear ramp
//! plus a mixture of slow sinusoids, which stand in for the unspecified
//! nonlinear drift.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::SampledSignal;

/// Exclusive upper bound on drift frequencies.
pub const MAX_DRIFT_FREQ_HZ: f64 = 0.1;
/// Lower bound for randomly drawn drift frequencies.
pub const MIN_RANDOM_DRIFT_FREQ_HZ: f64 = 0.005;
/// Horizontal linearity range of the EOG.
pub const MAX_TARGET_DEG: f64 = 30.0;

/// Target spacing and viewing distance of the default guide.
pub const TARGET_SPACING_M: f64 = 0.05;
pub const VIEWING_DISTANCE_M: f64 = 0.44;

pub const CENTER: &str = "C";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub target: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScript {
    pub fixations: Vec<Fixation>,
    /// Target id to horizontal gaze angle in degrees.
    pub targets: BTreeMap<String, f64>,
    pub saccade_duration_s: f64,
    /// EOG amplitude per degree before amplification.
    pub amplitude_scale_v_per_deg: f64,
    pub gain: f64,
}

/// Nine targets L4..L1, C, R1..R4, 5 cm apart, viewed from 44 cm.
pub fn default_target_guide() -> BTreeMap<String, f64> {
    let mut targets = BTreeMap::new();
    for step in -4i32..=4 {
        let id = match step {
            0 => CENTER.to_string(),
            s if s < 0 => format!("L{}", -s),
            s => format!("R{s}"),
        };
        let offset = step as f64 * TARGET_SPACING_M;
        targets.insert(id, (offset / VIEWING_DISTANCE_M).atan().to_degrees());
    }
    targets
}

/// Center calibration (5 s), then L1..L4 and R1..R4 each followed by a
/// return to center, 2 s per fixation.
pub fn default_trial_script() -> TrialScript {
    let mut fixations = vec![Fixation {
        target: CENTER.into(),
        duration_s: 5.0,
    }];
    for side in ["L", "R"] {
        for i in 1..=4 {
            fixations.push(Fixation {
                target: format!("{side}{i}"),
                duration_s: 2.0,
            });
            fixations.push(Fixation {
                target: CENTER.into(),
                duration_s: 2.0,
            });
        }
    }
    TrialScript {
        fixations,
        targets: default_target_guide(),
        saccade_duration_s: 0.05,
        amplitude_scale_v_per_deg: 20e-6,
        gain: 300.0,
    }
}

impl TrialScript {
    pub fn validate(&self) -> Result<()> {
        if self.fixations.is_empty() {
            return Err(invalid("trial script has no fixations"));
        }
        for (i, f) in self.fixations.iter().enumerate() {
            if !(f.duration_s > 0.0) {
                return Err(invalid(format!("fixation {i} has non-positive duration")));
            }
            if !self.targets.contains_key(&f.target) {
                return Err(invalid(format!("fixation {i} names unknown target `{}`", f.target)));
            }
        }
        for (id, &deg) in &self.targets {
            if !(deg.abs() <= MAX_TARGET_DEG) {
                return Err(invalid(format!("target {id} at {deg} deg is outside +/-30 deg")));
            }
        }
        if !(self.saccade_duration_s >= 0.0) {
            return Err(invalid("saccade duration must be non-negative"));
        }
        if !(self.amplitude_scale_v_per_deg > 0.0 && self.gain > 0.0) {
            return Err(invalid("amplitude scale and gain must be positive"));
        }
        for w in self.fixations.windows(2) {
            if !(self.saccade_duration_s < w[1].duration_s) {
                return Err(invalid("saccade duration must be shorter than each fixation"));
            }
        }
        Ok(())
    }

    /// Volts per degree at the recorder.
    pub fn volts_per_deg(&self) -> f64 {
        self.amplitude_scale_v_per_deg * self.gain
    }

    pub fn duration_s(&self) -> f64 {
        self.fixations.iter().map(|f| f.duration_s).sum()
    }

    pub fn saccade_count(&self) -> usize {
        self.fixations.len().saturating_sub(1)
    }

    fn angle(&self, target: &str) -> f64 {
        self.targets[target]
    }

    /// Largest level change between consecutive fixations, in volts.
    pub fn largest_step_v(&self) -> f64 {
        self.fixations
            .windows(2)
            .map(|w| (self.angle(&w[1].target) - self.angle(&w[0].target)).abs())
            .fold(0.0, f64::max)
            * self.volts_per_deg()
    }

    /// Smallest non-zero level change between consecutive fixations.
    pub fn smallest_step_v(&self) -> f64 {
        self.fixations
            .windows(2)
            .map(|w| (self.angle(&w[1].target) - self.angle(&w[0].target)).abs())
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min)
            * self.volts_per_deg()
    }
}

/// A linear ramp plus slow sinusoids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    pub linear_slope_v_per_s: f64,
    pub sinusoids: Vec<Sinusoid>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude_v: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

impl DriftSpec {
    pub fn none() -> Self {
        Self {
            linear_slope_v_per_s: 0.0,
            sinusoids: Vec::new(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.linear_slope_v_per_s.is_finite() {
            return Err(invalid("drift slope must be finite"));
        }
        for (i, s) in self.sinusoids.iter().enumerate() {
            if !(s.freq_hz >= 0.0 && s.freq_hz < MAX_DRIFT_FREQ_HZ) {
                return Err(invalid(format!(
                    "drift sinusoid {i}: frequency {} Hz must be in [0, {MAX_DRIFT_FREQ_HZ}) Hz",
                    s.freq_hz
                )));
            }
            if !(s.amplitude_v.is_finite() && s.phase_rad.is_finite()) {
                return Err(invalid(format!("drift sinusoid {i}: non-finite parameter")));
            }
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.linear_slope_v_per_s * t
            + self
                .sinusoids
                .iter()
                .map(|s| s.amplitude_v * (2.0 * PI * s.freq_hz * t + s.phase_rad).sin())
                .sum::<f64>()
    }
}

/// Ground-truth saccade: the last sample at the old level and the first
/// at the new one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSaccade {
    pub start_idx: usize,
    pub end_idx: usize,
    pub from_deg: f64,
    pub to_deg: f64,
    pub from_target: String,
    pub to_target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueBlink {
    pub start_idx: usize,
    pub end_idx: usize,
}

/// Every component of a generated trial. `raw = clean + drift + noise`
/// holds sample for sample; blink pulses are part of `noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub raw: SampledSignal,
    pub clean: SampledSignal,
    pub drift: SampledSignal,
    pub noise: SampledSignal,
    pub gaze: SampledSignal,
    pub events: Vec<TrueSaccade>,
    pub blinks: Vec<TrueBlink>,
}

impl GroundTruth {
    /// Recomputes `raw` from the components.
    fn assemble_raw(clean: &SampledSignal, drift: &SampledSignal, noise: &SampledSignal) -> Result<SampledSignal> {
        let raw = clean
            .samples()
            .iter()
            .zip(drift.samples())
            .zip(noise.samples())
            .map(|((c, d), w)| c + d + w)
            .collect();
        clean.with_samples(raw)
    }

    /// Checks the additive identity exactly.
    pub fn identity_holds(&self) -> bool {
        self.raw
            .samples()
            .iter()
            .zip(self.clean.samples())
            .zip(self.drift.samples())
            .zip(self.noise.samples())
            .all(|(((r, c), d), w)| *r == c + d + w)
    }
}

/// Parameters of [`synthesize`] other than the script.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub fs_hz: f64,
    pub noise_std_v: f64,
    pub blink_rate_hz: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            fs_hz: crate::signal::DEFAULT_FS_HZ,
            noise_std_v: 2e-4,
            blink_rate_hz: 0.0,
            seed: 2025,
        }
    }
}

/// Margin kept between a blink and any saccade ramp.
const BLINK_MARGIN_S: f64 = 0.4;

/// Generates one trial. Deterministic in `(script, params)`.
pub fn synthesize(script: &TrialScript, params: &SynthParams) -> Result<GroundTruth> {
    script.validate()?;
    let fs = params.fs_hz;
    if !(fs > 0.0) {
        return Err(invalid("sampling rate must be positive"));
    }
    if script.saccade_duration_s > 0.0 && fs * script.saccade_duration_s < 4.0 {
        return Err(invalid("sampling rate too low to resolve the saccade ramp"));
    }
    if !(params.noise_std_v >= 0.0) || !(params.blink_rate_hz >= 0.0) {
        return Err(invalid("noise std and blink rate must be non-negative"));
    }

    let n = (script.duration_s() * fs).round() as usize;
    let vpd = script.volts_per_deg();
    let ramp = script.saccade_duration_s;

    // Saccade onset times and the angles either side.
    let mut onsets = Vec::new();
    let mut t = 0.0;
    for w in script.fixations.windows(2) {
        t += w[0].duration_s;
        onsets.push((t, script.angle(&w[0].target), script.angle(&w[1].target), w));
    }

    let mut gaze = vec![script.angle(&script.fixations[0].target); n];
    for (k, g) in gaze.iter_mut().enumerate() {
        let tk = k as f64 / fs;
        for &(t0, from, to, _) in &onsets {
            if tk < t0 {
                break;
            }
            *g = if ramp > 0.0 && tk < t0 + ramp {
                let w = 0.5 * (1.0 - (PI * (tk - t0) / ramp).cos());
                from + (to - from) * w
            } else {
                to
            };
        }
    }
    let clean: Vec<f64> = gaze.iter().map(|g| g * vpd).collect();

    let events = onsets
        .iter()
        .map(|&(t0, from, to, w)| {
            let first_new = ((t0 + ramp) * fs).ceil() as usize;
            let last_old = (t0 * fs).floor() as usize;
            TrueSaccade {
                start_idx: last_old.min(n - 1),
                end_idx: first_new.max(last_old + 1).min(n - 1),
                from_deg: from,
                to_deg: to,
                from_target: w[0].target.clone(),
                to_target: w[1].target.clone(),
            }
        })
        .collect::<Vec<_>>();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut noise: Vec<f64> = if params.noise_std_v > 0.0 {
        let normal = Normal::new(0.0, params.noise_std_v).map_err(|e| invalid(e.to_string()))?;
        (0..n).map(|_| normal.sample(&mut rng)).collect()
    } else {
        vec![0.0; n]
    };

    let mut blinks = Vec::new();
    if params.blink_rate_hz > 0.0 {
        let exp = Exp::new(params.blink_rate_hz).map_err(|e| invalid(e.to_string()))?;
        let largest = script.largest_step_v().max(vpd);
        let total = n as f64 / fs;
        let mut t = 0.0;
        let mut last_end = f64::NEG_INFINITY;
        loop {
            t += exp.sample(&mut rng);
            let dur: f64 = rng.gen_range(0.15..=0.30);
            let amp = largest * rng.gen_range(5.0..=10.0);
            if t + dur >= total {
                break;
            }
            let clear_of_saccades = onsets
                .iter()
                .all(|&(s, ..)| t + dur + BLINK_MARGIN_S <= s || t >= s + ramp + BLINK_MARGIN_S);
            if !clear_of_saccades || t < last_end + BLINK_MARGIN_S || t < BLINK_MARGIN_S {
                continue;
            }
            let k0 = (t * fs).ceil() as usize;
            let k1 = ((t + dur) * fs).floor() as usize;
            for (k, w) in noise.iter_mut().enumerate().take(k1 + 1).skip(k0) {
                let u = (k as f64 / fs - t) / dur;
                *w += amp * 0.5 * (1.0 - (2.0 * PI * u).cos());
            }
            blinks.push(TrueBlink {
                start_idx: k0.saturating_sub(1),
                end_idx: (k1 + 1).min(n - 1),
            });
            last_end = t + dur;
        }
    }

    let clean = SampledSignal::new(fs, clean)?;
    let drift = clean.with_samples(vec![0.0; n])?;
    let noise = clean.with_samples(noise)?;
    let raw = GroundTruth::assemble_raw(&clean, &drift, &noise)?;
    Ok(GroundTruth {
        raw,
        gaze: clean.with_samples(gaze)?,
        clean,
        drift,
        noise,
        events,
        blinks,
    })
}

/// Replaces the drift component and recomputes the raw signal.
pub fn inject_drift(truth: &GroundTruth, spec: &DriftSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let clean = &truth.clean;
    let drift: Vec<f64> = (0..clean.len()).map(|k| spec.value_at(clean.time_at(k))).collect();
    let drift = clean.with_samples(drift)?;
    let raw = GroundTruth::assemble_raw(clean, &drift, &truth.noise)?;
    Ok(GroundTruth {
        raw,
        drift,
        ..truth.clone()
    })
}

/// Ranges for randomly drawn drift scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftRanges {
    pub amplitude_v: (f64, f64),
    pub slope_v_per_s: (f64, f64),
}

impl DriftRanges {
    /// Sinusoid amplitudes of 0.2 to 1.0 times the script's largest saccade
    /// step, and a linear ramp of up to that step over the whole trial.
    pub fn for_script(script: &TrialScript) -> Self {
        let step = script.largest_step_v();
        let slope = step / script.duration_s();
        Self {
            amplitude_v: (0.2 * step, 1.0 * step),
            slope_v_per_s: (-slope, slope),
        }
    }
}

pub fn random_drift_scenarios(n: usize, rng_seed: u64, ranges: &DriftRanges) -> Result<Vec<DriftSpec>> {
    if n == 0 {
        return Err(invalid("need at least one drift scenario"));
    }
    let (alo, ahi) = ranges.amplitude_v;
    let (slo, shi) = ranges.slope_v_per_s;
    if !(alo <= ahi && slo <= shi) {
        return Err(invalid("drift ranges must be ordered (low, high)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let seed = rng.gen::<u64>();
        let mut local = ChaCha8Rng::seed_from_u64(seed);
        let count = local.gen_range(1..=4);
        let sinusoids = (0..count)
            .map(|_| Sinusoid {
                amplitude_v: sample_range(&mut local, alo, ahi),
                freq_hz: local.gen_range(MIN_RANDOM_DRIFT_FREQ_HZ..MAX_DRIFT_FREQ_HZ),
                phase_rad: local.gen_range(0.0..2.0 * PI),
            })
            .collect();
        out.push(DriftSpec {
            linear_slope_v_per_s: sample_range(&mut local, slo, shi),
            sinusoids,
            seed,
        });
    }
    Ok(out)
}

fn sample_range(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}
