//! Blink artifact detection and removal.
//!
//! A blink shows up as a short positive pulse on the baseline: a positive
//! surge in the derivative followed shortly by a negative one, after which
//! the signal returns to its pre-pulse level. Two successive saccades also
//! produce opposite surges but leave the level shifted, which is what the
//! return-to-baseline test rejects.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{differentiate, slice_stats, SampledSignal, DEFAULT_LAG};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlinkConfig {
    /// Surge threshold as a multiple of the derivative's standard deviation.
    pub k_blink: f64,
    pub blink_max_duration_s: f64,
    /// Allowed difference between pre- and post-pulse level, as a fraction
    /// of the pulse excursion.
    pub return_tolerance_frac: f64,
    /// Also look for negative pulses (reversed electrodes).
    pub bipolar: bool,
}

impl Default for BlinkConfig {
    fn default() -> Self {
        Self {
            k_blink: 3.0,
            blink_max_duration_s: 0.4,
            return_tolerance_frac: 0.25,
            bipolar: false,
        }
    }
}

impl BlinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_blink > 0.0) {
            return Err(invalid("blink.k_blink must be positive"));
        }
        if !(self.blink_max_duration_s > 0.0) {
            return Err(invalid("blink.blink_max_duration_s must be positive"));
        }
        if !(self.return_tolerance_frac >= 0.0) {
            return Err(invalid("blink.return_tolerance_frac must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlinkEvent {
    pub start_idx: usize,
    pub peak_idx: usize,
    pub end_idx: usize,
}

/// Contiguous run of derivative samples beyond the surge threshold.
#[derive(Debug, Clone, Copy)]
struct Run {
    first: usize,
    last: usize,
    positive: bool,
}

fn surge_runs(deriv: &[f64], threshold: f64) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for (k, &d) in deriv.iter().enumerate() {
        let sign = if d >= threshold {
            Some(true)
        } else if d <= -threshold {
            Some(false)
        } else {
            None
        };
        let Some(positive) = sign else { continue };
        match runs.last_mut() {
            Some(run) if run.last + 1 == k && run.positive == positive => run.last = k,
            _ => runs.push(Run {
                first: k,
                last: k,
                positive,
            }),
        }
    }
    runs
}

/// Mean of up to `n` samples ending at (`forward == false`) or starting at
/// (`forward == true`) index `at`.
fn edge_level(x: &[f64], at: usize, n: usize, forward: bool) -> f64 {
    let (lo, hi) = if forward {
        (at, (at + n).min(x.len()))
    } else {
        (at + 1 - n.min(at + 1), at + 1)
    };
    x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
}

/// Derivative level, in standard deviations, below which a blink edge is
/// considered quiet.
const QUIET_K: f64 = 1.0;

fn detect_positive(x: &[f64], deriv: &[f64], sd: f64, fs: f64, cfg: &BlinkConfig) -> Vec<BlinkEvent> {
    let threshold = cfg.k_blink * sd;
    let quiet = QUIET_K * sd;
    let runs = surge_runs(deriv, threshold);
    let max_len = cfg.blink_max_duration_s * fs;
    let mut events = Vec::new();
    let mut i = 0;
    while i < runs.len() {
        let rise = runs[i];
        // Pair the rise with the next run only if that run is a fall; a
        // second rise in between is the better candidate for the pairing.
        let Some(fall) = runs.get(i + 1).copied().filter(|r| !r.positive) else {
            i += 1;
            continue;
        };
        if !rise.positive {
            i += 1;
            continue;
        }
        // Walk outward to the first quiet sample. The lagged difference at
        // the start already looks back, so pull the start back to match.
        let mut start = rise.first;
        while start > 0 && deriv[start] > quiet {
            start -= 1;
        }
        start = start.saturating_sub(DEFAULT_LAG - 1);
        let mut end = fall.last;
        while end + 1 < x.len() && deriv[end] < -quiet {
            end += 1;
        }
        if (fall.last - rise.first) as f64 > max_len {
            i += 1;
            continue;
        }
        // The differencing smears both edges; trim the slack back to the
        // maximum duration, keeping the surges themselves inside.
        while (end - start) as f64 > max_len {
            if rise.first - start >= end - fall.last {
                start += 1;
            } else {
                end -= 1;
            }
        }
        let peak = (start..=end)
            .max_by(|&a, &b| x[a].total_cmp(&x[b]))
            .unwrap_or(start);
        let before = edge_level(x, start, DEFAULT_LAG + 2, false);
        let after = edge_level(x, end, DEFAULT_LAG + 2, true);
        let excursion = x[peak] - before;
        if peak > start
            && peak < end
            && excursion > 0.0
            && (after - before).abs() <= cfg.return_tolerance_frac * excursion
        {
            events.push(BlinkEvent {
                start_idx: start,
                peak_idx: peak,
                end_idx: end,
            });
            i += 2;
        } else {
            i += 1;
        }
    }
    events
}

/// Finds blink pulses in a raw signal.
pub fn detect_blinks(raw: &SampledSignal, cfg: &BlinkConfig) -> Result<Vec<BlinkEvent>> {
    cfg.validate()?;
    if raw.len() <= DEFAULT_LAG {
        return Ok(Vec::new());
    }
    let deriv = differentiate(raw, DEFAULT_LAG)?;
    let sd = slice_stats(deriv.samples()).std_dev;
    if sd == 0.0 {
        return Ok(Vec::new());
    }
    let x = raw.samples();
    let mut events = detect_positive(x, deriv.samples(), sd, raw.fs_hz(), cfg);
    if cfg.bipolar {
        let neg_x: Vec<f64> = x.iter().map(|v| -v).collect();
        let neg_d: Vec<f64> = deriv.samples().iter().map(|v| -v).collect();
        events.extend(detect_positive(&neg_x, &neg_d, sd, raw.fs_hz(), cfg));
        events.sort_by_key(|e| e.start_idx);
        let mut kept: Vec<BlinkEvent> = Vec::with_capacity(events.len());
        for e in events {
            match kept.last() {
                Some(prev) if e.start_idx <= prev.end_idx => {}
                _ => kept.push(e),
            }
        }
        events = kept;
    }
    Ok(events)
}

/// Replaces each blink window by the chord between its endpoint samples.
pub fn remove_blinks(raw: &SampledSignal, blinks: &[BlinkEvent]) -> Result<SampledSignal> {
    let n = raw.len();
    let mut prev_end: Option<usize> = None;
    for b in blinks {
        if b.start_idx >= b.end_idx || b.end_idx >= n {
            return Err(invalid(format!(
                "blink [{}, {}] is empty or out of range for {n} samples",
                b.start_idx, b.end_idx
            )));
        }
        if let Some(pe) = prev_end {
            if b.start_idx <= pe {
                return Err(invalid(format!(
                    "blink starting at {} overlaps or precedes the previous one ending at {pe}",
                    b.start_idx
                )));
            }
        }
        prev_end = Some(b.end_idx);
    }
    let mut out = raw.samples().to_vec();
    for b in blinks {
        let (a, z) = (b.start_idx, b.end_idx);
        let (ya, yz) = (out[a], out[z]);
        let span = (z - a) as f64;
        for (k, v) in out.iter_mut().enumerate().take(z).skip(a + 1) {
            let frac = (k - a) as f64 / span;
            *v = ya + (yz - ya) * frac;
        }
    }
    raw.with_samples(out)
}
