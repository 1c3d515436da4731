//! Saccade peak detection on the signal derivative, window detection, and
//! the split of a signal into its saccadic and saccade-excluded parts.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{slice_stats, SampledSignal, DEFAULT_LAG};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    /// Peak threshold `s_p` as a multiple of the derivative std.
    pub k_peak: f64,
    /// Window threshold `s_i` as a multiple of the derivative std.
    pub k_window: f64,
    /// Super-threshold samples within this span of a group's first member
    /// belong to the same peak.
    pub group_window_s: f64,
    pub lag_n: usize,
    /// When set, `s_i` uses the derivative std over +/- this many seconds
    /// around each peak instead of the global std.
    pub local_window_s: Option<f64>,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            k_peak: 3.0,
            k_window: 1.0,
            group_window_s: 0.5,
            lag_n: DEFAULT_LAG,
            local_window_s: None,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_peak > 0.0 && self.k_window > 0.0 && self.group_window_s > 0.0) {
            return Err(invalid("detect: k_peak, k_window and group_window_s must be positive"));
        }
        if self.lag_n == 0 {
            return Err(invalid("detect: lag_n must be positive"));
        }
        if let Some(w) = self.local_window_s {
            if !(w > 0.0) {
                return Err(invalid("detect: local_window_s must be positive"));
            }
        }
        Ok(())
    }
}

/// One detected saccade: the peak sample and the window around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub peak_idx: usize,
    pub start_idx: usize,
    pub end_idx: usize,
    /// Sign of the derivative at the peak, +1 or -1.
    pub polarity: i8,
}

impl SaccadeEvent {
    pub fn contains(&self, k: usize) -> bool {
        self.start_idx <= k && k <= self.end_idx
    }
}

/// Checks that events are in range, well formed, sorted and disjoint.
pub fn validate_events(events: &[SaccadeEvent], len: usize) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        if !(e.start_idx <= e.peak_idx && e.peak_idx <= e.end_idx) {
            return Err(invalid(format!("event {i}: start <= peak <= end violated")));
        }
        if e.end_idx >= len {
            return Err(invalid(format!(
                "event {i}: end index {} out of range for {len} samples",
                e.end_idx
            )));
        }
        if i > 0 && events[i - 1].end_idx >= e.start_idx {
            return Err(invalid(format!(
                "events {} and {i} overlap or are out of order",
                i - 1
            )));
        }
    }
    Ok(())
}

/// Earliest index of each group of samples with `|deriv| >= s_p`.
pub fn detect_peaks(deriv: &SampledSignal, cfg: &DetectConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let d = deriv.samples();
    let sd = slice_stats(d).std_dev;
    if sd == 0.0 {
        return Ok(Vec::new());
    }
    let s_p = cfg.k_peak * sd;
    let group = cfg.group_window_s * deriv.fs_hz();
    let mut peaks = Vec::new();
    let mut group_first: Option<usize> = None;
    for (k, v) in d.iter().enumerate() {
        if v.abs() < s_p {
            continue;
        }
        match group_first {
            Some(first) if (k - first) as f64 <= group => {}
            _ => {
                peaks.push(k);
                group_first = Some(k);
            }
        }
    }
    Ok(peaks)
}

fn window_threshold(d: &[f64], peak_idx: usize, fs: f64, cfg: &DetectConfig) -> f64 {
    let sd = match cfg.local_window_s {
        None => slice_stats(d).std_dev,
        Some(w) => {
            let half = (w * fs).round() as usize;
            let lo = peak_idx.saturating_sub(half);
            let hi = (peak_idx + half + 1).min(d.len());
            slice_stats(&d[lo..hi]).std_dev
        }
    };
    cfg.k_window * sd
}

/// Traces outward from a peak to the nearest sub-threshold samples on
/// either side, clamping at the signal boundary.
pub fn detect_window(deriv: &SampledSignal, peak_idx: usize, cfg: &DetectConfig) -> Result<SaccadeEvent> {
    cfg.validate()?;
    let d = deriv.samples();
    if peak_idx >= d.len() {
        return Err(invalid(format!(
            "peak index {peak_idx} out of range for {} samples",
            d.len()
        )));
    }
    let s_i = window_threshold(d, peak_idx, deriv.fs_hz(), cfg);
    if d[peak_idx].abs() < s_i {
        return Err(invalid(format!(
            "sample {peak_idx} is below the window threshold {s_i}"
        )));
    }
    let start_idx = (0..peak_idx).rev().find(|&k| d[k].abs() < s_i).unwrap_or(0);
    let end_idx = (peak_idx + 1..d.len())
        .find(|&k| d[k].abs() < s_i)
        .unwrap_or(d.len() - 1);
    Ok(SaccadeEvent {
        peak_idx,
        start_idx,
        end_idx,
        polarity: if d[peak_idx] >= 0.0 { 1 } else { -1 },
    })
}

/// Runs peak and window detection and merges overlapping windows so the
/// result is sorted and disjoint.
pub fn detect_saccades(deriv: &SampledSignal, cfg: &DetectConfig) -> Result<Vec<SaccadeEvent>> {
    let d = deriv.samples();
    let mut events: Vec<SaccadeEvent> = Vec::new();
    for peak in detect_peaks(deriv, cfg)? {
        let ev = detect_window(deriv, peak, cfg)?;
        match events.last_mut() {
            Some(prev) if ev.start_idx <= prev.end_idx => {
                prev.start_idx = prev.start_idx.min(ev.start_idx);
                prev.end_idx = prev.end_idx.max(ev.end_idx);
                if d[ev.peak_idx].abs() > d[prev.peak_idx].abs() {
                    prev.peak_idx = ev.peak_idx;
                    prev.polarity = ev.polarity;
                }
            }
            _ => events.push(ev),
        }
    }
    Ok(events)
}

/// Copy of the signal inside the saccade windows, zero elsewhere.
pub fn extract_saccades(signal: &SampledSignal, events: &[SaccadeEvent]) -> Result<SampledSignal> {
    validate_events(events, signal.len())?;
    let x = signal.samples();
    let mut out = vec![0.0; x.len()];
    for e in events {
        out[e.start_idx..=e.end_idx].copy_from_slice(&x[e.start_idx..=e.end_idx]);
    }
    signal.with_samples(out)
}

/// The signal with its saccadic part removed, `signal - saccadic`.
pub fn exclude_saccades(signal: &SampledSignal, saccadic: &SampledSignal) -> Result<SampledSignal> {
    signal.sub(saccadic)
}

/// Serializes events as `peak_idx,start_idx,end_idx,polarity`.
pub fn format_events_csv(events: &[SaccadeEvent]) -> String {
    let mut out = String::from("peak_idx,start_idx,end_idx,polarity\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{}\n",
            e.peak_idx, e.start_idx, e.end_idx, e.polarity
        ));
    }
    out
}

pub fn parse_events_csv(text: &str, name: &str) -> Result<Vec<SaccadeEvent>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| crate::io::parse_err(name, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["peak_idx", "start_idx", "end_idx", "polarity"] {
        return Err(crate::io::parse_err(
            name,
            1,
            "expected header `peak_idx,start_idx,end_idx,polarity`",
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<SaccadeEvent>() {
        let ev = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            crate::io::parse_err(name, line, e.to_string())
        })?;
        out.push(ev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const FS: f64 = 250.0;

    fn sig(xs: Vec<f64>) -> SampledSignal {
        SampledSignal::new(FS, xs).unwrap()
    }

    fn burst(n: usize, at: std::ops::RangeInclusive<usize>, height: f64) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for k in at {
            d[k] = height;
        }
        d
    }

    #[test]
    fn zero_signal_has_no_peaks() {
        let d = sig(vec![0.0; 500]);
        assert!(detect_peaks(&d, &DetectConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn rectangular_burst_reports_earliest_index() {
        let d = sig(burst(1000, 100..=110, 5.0));
        assert_eq!(detect_peaks(&d, &DetectConfig::default()).unwrap(), vec![100]);
    }

    #[test]
    fn bursts_two_seconds_apart_are_separate() {
        let mut d = burst(2000, 300..=310, 4.0);
        for v in &mut d[800..=810] {
            *v = -4.0;
        }
        let peaks = detect_peaks(&sig(d), &DetectConfig::default()).unwrap();
        assert_eq!(peaks, vec![300, 800]);
    }

    #[test]
    fn bursts_inside_group_window_merge() {
        // 60 samples = 240 ms apart, inside the 500 ms grouping span.
        let mut d = burst(2000, 300..=305, 4.0);
        for v in &mut d[360..=365] {
            *v = 4.0;
        }
        let peaks = detect_peaks(&sig(d), &DetectConfig::default()).unwrap();
        assert_eq!(peaks, vec![300]);
    }

    #[test]
    fn triangular_burst_window() {
        // Triangle over 50..=60 peaking at 55; derivative std is small
        // compared to the interior samples.
        let mut d = vec![0.0; 1000];
        for k in 50..=60 {
            d[k] = 10.0 - 2.0 * (k as f64 - 55.0).abs();
        }
        let d = sig(d);
        let sd = slice_stats(d.samples()).std_dev;
        // Only the zero-height endpoints sit under s_i.
        assert!(sd < 2.0 && sd > 0.0);
        let ev = detect_window(&d, 55, &DetectConfig::default()).unwrap();
        assert_eq!((ev.start_idx, ev.end_idx), (50, 60));
        assert_eq!(ev.polarity, 1);
    }

    #[test]
    fn window_clamps_at_start() {
        let d = sig(burst(1000, 0..=10, -5.0));
        let ev = detect_window(&d, 3, &DetectConfig::default()).unwrap();
        assert_eq!((ev.start_idx, ev.end_idx), (0, 11));
        assert_eq!(ev.polarity, -1);
    }

    #[test]
    fn isolated_sample_window() {
        let d = sig(burst(1000, 400..=400, 5.0));
        let ev = detect_window(&d, 400, &DetectConfig::default()).unwrap();
        assert_eq!((ev.start_idx, ev.end_idx), (399, 401));
    }

    #[test]
    fn window_rejects_subthreshold_peak() {
        let d = sig(burst(1000, 400..=400, 5.0));
        assert!(detect_window(&d, 10, &DetectConfig::default()).is_err());
    }

    #[test]
    fn overlapping_windows_merge() {
        // Two peaks 1 s apart joined by a plateau that stays above s_i.
        let mut d = vec![0.0; 2000];
        for v in &mut d[500..=760] {
            *v = 1.0;
        }
        d[505] = 10.0;
        d[755] = 20.0;
        let cfg = DetectConfig {
            group_window_s: 0.1,
            ..Default::default()
        };
        let peaks = detect_peaks(&sig(d.clone()), &cfg).unwrap();
        assert_eq!(peaks.len(), 2);
        let events = detect_saccades(&sig(d), &cfg).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].peak_idx, 755);
        assert_eq!((events[0].start_idx, events[0].end_idx), (499, 761));
    }

    #[test]
    fn local_threshold_option() {
        // A long low plateau right after the burst sits above the global
        // threshold but below the local one.
        let mut d = burst(3000, 500..=510, 5.0);
        for v in &mut d[511..=700] {
            *v = 0.5;
        }
        let global = detect_window(&sig(d.clone()), 505, &DetectConfig::default()).unwrap();
        assert_eq!(global.end_idx, 701);
        let cfg = DetectConfig {
            local_window_s: Some(1.0),
            ..Default::default()
        };
        let ev = detect_window(&sig(d), 505, &cfg).unwrap();
        assert_eq!((ev.start_idx, ev.end_idx), (499, 511));
    }

    #[test]
    fn extract_examples() {
        let ramp: Vec<f64> = (0..40).map(|k| k as f64).collect();
        let s = sig(ramp.clone());
        let none = extract_saccades(&s, &[]).unwrap();
        assert!(none.samples().iter().all(|&v| v == 0.0));
        let all = SaccadeEvent {
            peak_idx: 5,
            start_idx: 0,
            end_idx: 39,
            polarity: 1,
        };
        assert_eq!(extract_saccades(&s, &[all]).unwrap(), s);
        let mid = SaccadeEvent {
            peak_idx: 15,
            start_idx: 10,
            end_idx: 20,
            polarity: 1,
        };
        let out = extract_saccades(&s, &[mid]).unwrap();
        for k in 0..40 {
            let expect = if (10..=20).contains(&k) { ramp[k] } else { 0.0 };
            assert_eq!(out.samples()[k], expect);
        }
    }

    #[test]
    fn extract_rejects_overlap() {
        let s = sig(vec![0.0; 50]);
        let a = SaccadeEvent {
            peak_idx: 12,
            start_idx: 10,
            end_idx: 20,
            polarity: 1,
        };
        let b = SaccadeEvent {
            peak_idx: 22,
            start_idx: 20,
            end_idx: 25,
            polarity: 1,
        };
        assert!(extract_saccades(&s, &[a, b]).is_err());
    }

    #[test]
    fn exclude_examples() {
        let s = sig(vec![1.0, -2.0, 3.5]);
        let zeros = sig(vec![0.0; 3]);
        assert_eq!(exclude_saccades(&s, &zeros).unwrap(), s);
        assert!(exclude_saccades(&s, &s)
            .unwrap()
            .samples()
            .iter()
            .all(|&v| v == 0.0));
        assert!(exclude_saccades(&s, &sig(vec![0.0; 2])).is_err());
    }

    #[test]
    fn events_csv_roundtrip() {
        let evs = vec![
            SaccadeEvent {
                peak_idx: 12,
                start_idx: 10,
                end_idx: 20,
                polarity: 1,
            },
            SaccadeEvent {
                peak_idx: 40,
                start_idx: 35,
                end_idx: 44,
                polarity: -1,
            },
        ];
        let text = format_events_csv(&evs);
        assert!(text.starts_with("peak_idx,start_idx,end_idx,polarity\n12,10,20,1\n"));
        assert_eq!(parse_events_csv(&text, "mem").unwrap(), evs);
    }

    proptest! {
        #[test]
        fn extract_and_exclude_partition_the_signal(
            xs in prop::collection::vec(-5.0f64..5.0, 20..200),
            cuts in prop::collection::vec(0usize..200, 0..8),
        ) {
            let n = xs.len();
            let mut cuts: Vec<usize> = cuts.into_iter().map(|c| c % n).collect();
            cuts.sort_unstable();
            cuts.dedup();
            let events: Vec<SaccadeEvent> = cuts
                .chunks_exact(2)
                .map(|w| SaccadeEvent { peak_idx: w[0], start_idx: w[0], end_idx: w[1], polarity: 1 })
                .collect();
            let s = sig(xs.clone());
            let sac = extract_saccades(&s, &events).unwrap();
            let excl = exclude_saccades(&s, &sac).unwrap();
            for k in 0..n {
                prop_assert_eq!(sac.samples()[k] + excl.samples()[k], xs[k]);
            }
        }
    }
}
