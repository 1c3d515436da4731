//! Baseline reconstruction.
//!
//! After the saccade windows are cut out, every post-saccade stretch of the
//! signal "floats" at the level the saccade moved it to. Each floating
//! segment is shifted by a level difference `delta` so that it joins the
//! baseline before the saccade, giving a signal that looks as if no
//! saccade had happened. What remains is the slow drift.
//!
//! The first segment is leveled against the original signal before the
//! first saccade (assumed drift-free calibration); every later segment is
//! leveled against the already adjusted segment preceding it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::saccade::{validate_events, SaccadeEvent};
use crate::signal::SampledSignal;

/// How the baseline is filled inside saccade windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapFill {
    /// Straight line between the baseline values either side of the window.
    #[default]
    Linear,
    /// Keep the saccade-excluded signal, which is zero inside windows.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Number of samples averaged on each side of a saccade.
    pub m_samples: usize,
    /// Duration of the drift-free calibration prefix. Informational only.
    pub calibration_s: f64,
    pub gap_fill: GapFill,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            m_samples: 15,
            calibration_s: 5.0,
            gap_fill: GapFill::Linear,
        }
    }
}

impl ReconstructConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_samples == 0 {
            return Err(invalid("reconstruct.m_samples must be at least 1"));
        }
        if !(self.calibration_s >= 0.0) {
            return Err(invalid("reconstruct.calibration_s must be non-negative"));
        }
        Ok(())
    }
}

/// Post-saccade stretch `[seg_start_idx, seg_end_idx]` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatingSegment {
    pub seg_start_idx: usize,
    pub seg_end_idx: usize,
    pub delta: Option<f64>,
}

/// A level difference and whether either averaging window had fewer than
/// `m` samples available.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    pub value: f64,
    pub truncated: bool,
}

/// One floating segment per saccade, running from the saccade's end to the
/// next saccade's start or the last sample.
pub fn segment(events: &[SaccadeEvent], signal_len: usize) -> Result<Vec<FloatingSegment>> {
    validate_events(events, signal_len)?;
    Ok(events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let end = events
                .get(i + 1)
                .map_or(signal_len - 1, |next| next.start_idx.min(signal_len - 1));
            FloatingSegment {
                seg_start_idx: ev.end_idx,
                seg_end_idx: end,
                delta: None,
            }
        })
        .collect())
}

/// Mean of `x[at - k]` for `k = 0..m`, not reaching below `floor`.
fn mean_backward(x: &[f64], at: usize, m: usize, floor: usize) -> (f64, bool) {
    let available = at - floor + 1;
    let n = m.min(available);
    let sum: f64 = x[at + 1 - n..=at].iter().sum();
    (sum / n as f64, n < m)
}

/// Mean of `x[at + k]` for `k = 0..m`, not reaching past `ceil`.
fn mean_forward(x: &[f64], at: usize, m: usize, ceil: usize) -> (f64, bool) {
    let available = ceil - at + 1;
    let n = m.min(available);
    let sum: f64 = x[at..at + n].iter().sum();
    (sum / n as f64, n < m)
}

/// Level difference for the first floating segment, measured on the
/// original signal: mean of the `m` samples ending at the saccade start
/// minus mean of the `m` samples starting at the saccade end.
pub fn compute_delta_first(
    raw: &SampledSignal,
    first: &SaccadeEvent,
    seg: &FloatingSegment,
    cfg: &ReconstructConfig,
) -> Result<Delta> {
    cfg.validate()?;
    check_segment(seg, first, raw.len())?;
    let x = raw.samples();
    let (before, t0) = mean_backward(x, first.start_idx, cfg.m_samples, 0);
    let (after, t1) = mean_forward(x, seg.seg_start_idx, cfg.m_samples, seg.seg_end_idx);
    Ok(Delta {
        value: before - after,
        truncated: t0 || t1,
    })
}

/// Level difference for a later segment: mean of the previously adjusted
/// segment just before this saccade minus mean of this floating segment
/// just after it.
///
/// `prev_adjusted` holds the adjusted values of `prev` and `floating` the
/// unadjusted values of `current`; only samples inside the respective
/// segments are read.
pub fn compute_delta_next(
    prev_adjusted: &SampledSignal,
    prev: &FloatingSegment,
    floating: &SampledSignal,
    current: &FloatingSegment,
    cfg: &ReconstructConfig,
) -> Result<Delta> {
    cfg.validate()?;
    prev_adjusted.check_aligned(floating, "delta")?;
    let n = floating.len();
    for s in [prev, current] {
        if s.seg_start_idx > s.seg_end_idx || s.seg_end_idx >= n {
            return Err(invalid("floating segment out of range"));
        }
    }
    if prev.seg_end_idx > current.seg_start_idx {
        return Err(invalid("floating segments out of order"));
    }
    let (before, t0) = mean_backward(
        prev_adjusted.samples(),
        prev.seg_end_idx,
        cfg.m_samples,
        prev.seg_start_idx,
    );
    let (after, t1) = mean_forward(
        floating.samples(),
        current.seg_start_idx,
        cfg.m_samples,
        current.seg_end_idx,
    );
    Ok(Delta {
        value: before - after,
        truncated: t0 || t1,
    })
}

fn check_segment(seg: &FloatingSegment, ev: &SaccadeEvent, len: usize) -> Result<()> {
    if seg.seg_start_idx != ev.end_idx || seg.seg_end_idx < seg.seg_start_idx || seg.seg_end_idx >= len
    {
        return Err(invalid("segment does not follow its saccade"));
    }
    Ok(())
}

/// Reconstructed baseline with the per-segment deltas that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub baseline: SampledSignal,
    pub segments: Vec<FloatingSegment>,
    /// Indices of segments whose delta used fewer than `m` samples.
    pub truncated: Vec<usize>,
}

impl Reconstruction {
    pub fn warnings(&self) -> Vec<String> {
        self.truncated
            .iter()
            .map(|i| format!("segment {i}: fewer than m samples available for leveling"))
            .collect()
    }
}

/// Rebuilds a continuous saccade-free baseline from the original signal,
/// its saccade-excluded version and the detected saccades.
pub fn reconstruct(
    raw: &SampledSignal,
    saccade_excluded: &SampledSignal,
    events: &[SaccadeEvent],
    cfg: &ReconstructConfig,
) -> Result<Reconstruction> {
    cfg.validate()?;
    raw.check_aligned(saccade_excluded, "reconstruct")?;
    let mut segments = segment(events, raw.len())?;
    let x = raw.samples();
    let mut baseline = saccade_excluded.samples().to_vec();
    let mut truncated = Vec::new();

    for i in 0..segments.len() {
        let delta = if i == 0 {
            compute_delta_first(raw, &events[0], &segments[0], cfg)?
        } else {
            // The adjusted previous segment already lives in `baseline`;
            // the floating segment is the original signal on its span.
            let prev = segments[i - 1];
            let cur = segments[i];
            let (before, t0) =
                mean_backward(&baseline, prev.seg_end_idx, cfg.m_samples, prev.seg_start_idx);
            let (after, t1) = mean_forward(x, cur.seg_start_idx, cfg.m_samples, cur.seg_end_idx);
            Delta {
                value: before - after,
                truncated: t0 || t1,
            }
        };
        if delta.truncated {
            truncated.push(i);
        }
        let seg = &mut segments[i];
        seg.delta = Some(delta.value);
        for k in seg.seg_start_idx..=seg.seg_end_idx {
            baseline[k] = x[k] + delta.value;
        }
    }

    if cfg.gap_fill == GapFill::Linear {
        for ev in events {
            let a = ev.start_idx;
            let z = ev.end_idx;
            // The first window's start sample belongs to the untouched
            // calibration prefix; later ones already hold adjusted values.
            let ya = if a < events[0].end_idx { x[a] } else { baseline[a] };
            let yz = baseline[z];
            baseline[a] = ya;
            let span = (z - a) as f64;
            for (k, v) in baseline.iter_mut().enumerate().take(z).skip(a + 1) {
                *v = ya + (yz - ya) * (k - a) as f64 / span;
            }
        }
    }

    Ok(Reconstruction {
        baseline: raw.with_samples(baseline)?,
        segments,
        truncated,
    })
}

/// Serializes segment deltas as `segment_idx,start_idx,end_idx,delta_v`.
pub fn format_segments_csv(segments: &[FloatingSegment]) -> String {
    let mut out = String::from("segment_idx,start_idx,end_idx,delta_v\n");
    for (i, s) in segments.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i,
            s.seg_start_idx,
            s.seg_end_idx,
            s.delta.unwrap_or(f64::NAN)
        ));
    }
    out
}
