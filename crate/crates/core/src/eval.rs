//! Gaze regression, per-saccade fixation errors and tabulated reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::saccade::{validate_events, SaccadeEvent};
use crate::signal::{slice_stats, SampledSignal};
use crate::simulate::{TrueSaccade, CENTER};

/// Affine map from de-drifted volts to degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeRegression {
    pub slope_deg_per_v: f64,
    pub intercept_deg: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `reference = slope * x + intercept` over all samples.
pub fn fit_regression(dedrifted: &SampledSignal, reference_deg: &SampledSignal) -> Result<GazeRegression> {
    dedrifted.check_aligned(reference_deg, "regression")?;
    let x = dedrifted.samples();
    let y = reference_deg.samples();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Tolerate the rounding left by the mean of a constant input.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(sxx > n * (1e-12 * scale).powi(2)) {
        return Err(Error::DegenerateFit("de-drifted signal has zero variance".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(GazeRegression {
        slope_deg_per_v: slope,
        intercept_deg: intercept,
        r_squared,
    })
}

pub fn predict_gaze(dedrifted: &SampledSignal, reg: &GazeRegression) -> Result<SampledSignal> {
    let out = dedrifted
        .samples()
        .iter()
        .map(|v| reg.slope_deg_per_v * v + reg.intercept_deg)
        .collect();
    dedrifted.with_samples(out)
}

/// Post-saccade fixation window used for the error average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub guard_s: f64,
    pub max_window_s: f64,
    pub min_samples: usize,
    /// Count returns to center in the overall statistics (and as a row).
    pub include_center: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            guard_s: 0.1,
            max_window_s: 1.0,
            min_samples: 5,
            include_center: false,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.guard_s >= 0.0 && self.max_window_s > self.guard_s) {
            return Err(invalid("eval window needs 0 <= guard_s < max_window_s"));
        }
        if self.min_samples == 0 {
            return Err(invalid("min_samples must be at least 1"));
        }
        Ok(())
    }
}

/// Error for one saccade; `epsilon_deg` is `None` when its window was too short.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaccadeError {
    pub event_idx: usize,
    pub epsilon_deg: Option<f64>,
    pub window_start: usize,
    pub window_end: usize,
}

/// Mean reference minus mean prediction over the fixation after each
/// saccade: `[end + guard, min(next start, end + max_window)]`.
pub fn saccade_errors(
    predicted: &SampledSignal,
    reference: &SampledSignal,
    events: &[SaccadeEvent],
    cfg: &EvalConfig,
) -> Result<Vec<SaccadeError>> {
    cfg.validate()?;
    predicted.check_aligned(reference, "saccade errors")?;
    let n = predicted.len();
    validate_events(events, n)?;
    let guard = predicted.samples_for(cfg.guard_s);
    let span = predicted.samples_for(cfg.max_window_s);
    let p = predicted.samples();
    let r = reference.samples();
    Ok(events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let next = events.get(i + 1).map_or(n - 1, |e| e.start_idx);
            let lo = ev.end_idx + guard;
            let hi = next.min(ev.end_idx + span).min(n - 1);
            let epsilon_deg = (hi >= lo && hi - lo + 1 >= cfg.min_samples).then(|| {
                let len = (hi - lo + 1) as f64;
                r[lo..=hi].iter().sum::<f64>() / len - p[lo..=hi].iter().sum::<f64>() / len
            });
            SaccadeError {
                event_idx: i,
                epsilon_deg,
                window_start: lo,
                window_end: hi,
            }
        })
        .collect())
}

/// Converts ground-truth saccades to detector-style events.
pub fn events_from_truth(truth: &[TrueSaccade]) -> Vec<SaccadeEvent> {
    truth
        .iter()
        .map(|t| SaccadeEvent {
            peak_idx: (t.start_idx + t.end_idx) / 2,
            start_idx: t.start_idx,
            end_idx: t.end_idx,
            polarity: if t.to_deg >= t.from_deg { 1 } else { -1 },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub target: String,
    pub mean_abs_error_deg: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method_id: String,
    /// Rows in display order (L4..L1, R1..R4).
    pub per_target: Vec<TargetRow>,
    /// Mean and population std of per-saccade |epsilon|.
    pub overall_mean_deg: f64,
    pub overall_std_deg: f64,
    /// Mean and population std of the per-target row means.
    pub target_mean_deg: f64,
    pub target_std_deg: f64,
    pub evaluated: usize,
    /// Event indices whose fixation window was too short.
    pub skipped: Vec<usize>,
}

/// Sort key putting L targets farthest first, then center, then R targets.
fn target_key(id: &str) -> (u8, i64, String) {
    let num = |s: &str| s.parse::<i64>().ok();
    if let Some(k) = id.strip_prefix('L').and_then(num) {
        (0, -k, String::new())
    } else if id == CENTER {
        (1, 0, String::new())
    } else if let Some(k) = id.strip_prefix('R').and_then(num) {
        (2, k, String::new())
    } else {
        (3, 0, id.to_string())
    }
}

/// Groups |epsilon| by destination target. Center targets are left out
/// unless `include_center` is set.
pub fn build_report(
    errors: &[SaccadeError],
    targets: &BTreeMap<usize, String>,
    method_id: &str,
    include_center: bool,
) -> Result<EvalReport> {
    let mut groups: BTreeMap<(u8, i64, String), (String, Vec<f64>)> = BTreeMap::new();
    let mut all = Vec::new();
    let mut skipped = Vec::new();
    for e in errors {
        let target = targets
            .get(&e.event_idx)
            .ok_or_else(|| invalid(format!("event {} has no target", e.event_idx)))?;
        let Some(eps) = e.epsilon_deg else {
            skipped.push(e.event_idx);
            continue;
        };
        if target == CENTER && !include_center {
            continue;
        }
        all.push(eps.abs());
        groups
            .entry(target_key(target))
            .or_insert_with(|| (target.clone(), Vec::new()))
            .1
            .push(eps.abs());
    }
    let per_target: Vec<TargetRow> = groups
        .into_values()
        .map(|(target, v)| TargetRow {
            mean_abs_error_deg: v.iter().sum::<f64>() / v.len() as f64,
            count: v.len(),
            target,
        })
        .collect();
    let (overall_mean_deg, overall_std_deg) = mean_std(&all);
    let row_means: Vec<f64> = per_target.iter().map(|r| r.mean_abs_error_deg).collect();
    let (target_mean_deg, target_std_deg) = mean_std(&row_means);
    Ok(EvalReport {
        method_id: method_id.to_string(),
        per_target,
        overall_mean_deg,
        overall_std_deg,
        target_mean_deg,
        target_std_deg,
        evaluated: all.len(),
        skipped,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let s = slice_stats(v);
    (s.mean, s.std_dev)
}

/// Aligned plain-text table with one column per report: per-target rows, then the averages.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut keys: Vec<(u8, i64, String)> = Vec::new();
    let mut names: BTreeMap<(u8, i64, String), String> = BTreeMap::new();
    for r in reports {
        for row in &r.per_target {
            let k = target_key(&row.target);
            if !names.contains_key(&k) {
                keys.push(k.clone());
                names.insert(k, row.target.clone());
            }
        }
    }
    keys.sort();

    let col_w = reports
        .iter()
        .map(|r| r.method_id.len())
        .chain([15])
        .max()
        .unwrap_or(15);
    let label_w = 14;
    let mut out = String::new();
    let _ = write!(out, "{:<label_w$}", "Target");
    for r in reports {
        let _ = write!(out, " | {:>col_w$}", r.method_id);
    }
    out.push('\n');
    out.push_str(&"-".repeat(label_w + reports.len() * (col_w + 3)));
    out.push('\n');
    for k in &keys {
        let _ = write!(out, "{:<label_w$}", names[k]);
        for r in reports {
            let cell = r
                .per_target
                .iter()
                .find(|row| target_key(&row.target) == *k)
                .map_or("-".to_string(), |row| format!("{:.3}", row.mean_abs_error_deg));
            let _ = write!(out, " | {cell:>col_w$}");
        }
        out.push('\n');
    }
    let mut summary = |label: &str, f: &dyn Fn(&EvalReport) -> String| {
        let _ = write!(out, "{label:<label_w$}");
        for r in reports {
            let _ = write!(out, " | {:>col_w$}", f(r));
        }
        out.push('\n');
    };
    summary("Average", &|r| format!("{:.3} ± {:.3}", r.overall_mean_deg, r.overall_std_deg));
    summary("Target average", &|r| format!("{:.3} ± {:.3}", r.target_mean_deg, r.target_std_deg));
    summary("Saccades", &|r| r.evaluated.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(v: Vec<f64>) -> SampledSignal {
        SampledSignal::new(100.0, v).unwrap()
    }

    #[test]
    fn exact_affine_fit() {
        let x: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let r = fit_regression(&sig(x), &sig(y)).unwrap();
        assert!((r.slope_deg_per_v - 2.0).abs() < 1e-12);
        assert!((r.intercept_deg - 3.0).abs() < 1e-12);
        assert!((r.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_reference_has_low_r2() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..20000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..20000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = fit_regression(&sig(x), &sig(y)).unwrap();
        assert!(r.r_squared < 1e-3, "{}", r.r_squared);
    }

    #[test]
    fn constant_input_is_degenerate() {
        let err = fit_regression(&sig(vec![0.1; 30]), &sig((0..30).map(f64::from).collect())).unwrap_err();
        assert!(matches!(err, Error::DegenerateFit(_)));
    }

    #[test]
    fn prediction_examples() {
        let x = sig(vec![0.006; 10]);
        let reg = GazeRegression {
            slope_deg_per_v: 1000.0,
            intercept_deg: -2.0,
            r_squared: 1.0,
        };
        let p = predict_gaze(&x, &reg).unwrap();
        assert!(p.samples().iter().all(|v| (v - 4.0).abs() < 1e-12));

        let id = GazeRegression {
            slope_deg_per_v: 1.0,
            intercept_deg: 0.0,
            r_squared: 1.0,
        };
        let y = sig(vec![0.5, -1.0, 2.0]);
        assert_eq!(predict_gaze(&y, &id).unwrap(), y);
    }

    #[test]
    fn prediction_keeps_fit_quality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..500).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| 30.0 * v + rng.gen_range(-3.0..3.0)).collect();
        let (xs, ys) = (sig(x), sig(y));
        let reg = fit_regression(&xs, &ys).unwrap();
        let pred = predict_gaze(&xs, &reg).unwrap();
        let again = fit_regression(&pred, &ys).unwrap();
        assert!((again.r_squared - reg.r_squared).abs() < 1e-9);
    }

    fn two_events() -> Vec<SaccadeEvent> {
        vec![
            SaccadeEvent {
                peak_idx: 102,
                start_idx: 100,
                end_idx: 105,
                polarity: 1,
            },
            SaccadeEvent {
                peak_idx: 302,
                start_idx: 300,
                end_idx: 305,
                polarity: -1,
            },
        ]
    }

    #[test]
    fn error_sign_convention() {
        let r = sig((0..500).map(|k| (k / 100) as f64).collect());
        let same = saccade_errors(&r, &r, &two_events(), &EvalConfig::default()).unwrap();
        assert!(same.iter().all(|e| e.epsilon_deg == Some(0.0)));
        let p = sig(r.samples().iter().map(|v| v + 1.0).collect());
        let off = saccade_errors(&p, &r, &two_events(), &EvalConfig::default()).unwrap();
        for e in off {
            assert!((e.epsilon_deg.unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn windowed_means_match_hand_computation() {
        // Reference steps to 5 deg after the first saccade and -3 after the
        // second; prediction is a ramp so window means differ per event.
        let n = 500;
        let reference = sig((0..n).map(|k| if k < 103 { 0.0 } else if k < 303 { 5.0 } else { -3.0 }).collect());
        let predicted = sig((0..n).map(|k| k as f64 * 0.01).collect());
        let errs = saccade_errors(&predicted, &reference, &two_events(), &EvalConfig::default()).unwrap();
        // 100 Hz: guard 10 samples, cap 100 samples.
        // Event 0: [115, min(300, 205)] = [115, 205].
        let mean_p0 = (115..=205).map(|k| k as f64 * 0.01).sum::<f64>() / 91.0;
        assert_eq!((errs[0].window_start, errs[0].window_end), (115, 205));
        assert!((errs[0].epsilon_deg.unwrap() - (5.0 - mean_p0)).abs() < 1e-12);
        // Event 1: [315, min(499, 405)] = [315, 405].
        let mean_p1 = (315..=405).map(|k| k as f64 * 0.01).sum::<f64>() / 91.0;
        assert!((errs[1].epsilon_deg.unwrap() - (-3.0 - mean_p1)).abs() < 1e-12);
    }

    #[test]
    fn short_windows_are_skipped() {
        let r = sig(vec![0.0; 120]);
        let ev = vec![SaccadeEvent {
            peak_idx: 102,
            start_idx: 100,
            end_idx: 105,
            polarity: 1,
        }];
        let errs = saccade_errors(&r, &r, &ev, &EvalConfig::default()).unwrap();
        // [115, 119] has exactly 5 samples.
        assert_eq!(errs[0].epsilon_deg, Some(0.0));
        let r = sig(vec![0.0; 119]);
        let errs = saccade_errors(&r, &r, &ev, &EvalConfig::default()).unwrap();
        assert_eq!(errs[0].epsilon_deg, None);
        let mut targets = BTreeMap::new();
        targets.insert(0, "R1".to_string());
        let rep = build_report(&errs, &targets, "fgd", false).unwrap();
        assert_eq!(rep.skipped, vec![0]);
        assert_eq!(rep.evaluated, 0);
    }

    fn errs(v: &[f64]) -> Vec<SaccadeError> {
        v.iter()
            .enumerate()
            .map(|(i, &e)| SaccadeError {
                event_idx: i,
                epsilon_deg: Some(e),
                window_start: 0,
                window_end: 0,
            })
            .collect()
    }

    #[test]
    fn report_statistics() {
        let mut targets = BTreeMap::new();
        for (i, t) in ["R1", "L2", "R1"].iter().enumerate() {
            targets.insert(i, t.to_string());
        }
        let rep = build_report(&errs(&[1.0, -2.0, 3.0]), &targets, "fgd", false).unwrap();
        assert!((rep.overall_mean_deg - 2.0).abs() < 1e-12);
        assert!((rep.overall_std_deg - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let order: Vec<&str> = rep.per_target.iter().map(|r| r.target.as_str()).collect();
        assert_eq!(order, ["L2", "R1"]);
        assert_eq!(rep.per_target[1].count, 2);
        assert!((rep.per_target[1].mean_abs_error_deg - 2.0).abs() < 1e-12);
        assert_eq!(rep.per_target.iter().map(|r| r.count).sum::<usize>(), rep.evaluated);
        // Secondary aggregate: mean of the two row means.
        assert!((rep.target_mean_deg - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_errors_give_zero_report() {
        let mut targets = BTreeMap::new();
        for i in 0..4 {
            targets.insert(i, "L1".to_string());
        }
        let rep = build_report(&errs(&[0.0; 4]), &targets, "fgd", false).unwrap();
        assert_eq!((rep.overall_mean_deg, rep.overall_std_deg), (0.0, 0.0));
        assert!(rep.per_target.iter().all(|r| r.mean_abs_error_deg == 0.0));
    }

    #[test]
    fn table_shape_and_center_handling() {
        let order = ["L1", "C", "L2", "C", "L3", "C", "L4", "C", "R1", "C", "R2", "C", "R3", "C", "R4", "C"];
        let targets: BTreeMap<usize, String> = order.iter().enumerate().map(|(i, t)| (i, t.to_string())).collect();
        let e = errs(&[0.5; 16]);
        let rep = build_report(&e, &targets, "fgd", false).unwrap();
        let rows: Vec<&str> = rep.per_target.iter().map(|r| r.target.as_str()).collect();
        assert_eq!(rows, ["L4", "L3", "L2", "L1", "R1", "R2", "R3", "R4"]);
        assert_eq!(rep.evaluated, 8);
        let with_c = build_report(&e, &targets, "fgd", true).unwrap();
        assert_eq!(with_c.evaluated, 16);
        assert_eq!(with_c.per_target.iter().map(|r| r.count).sum::<usize>(), 16);

        let table = format_table(&[rep.clone(), rep]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2 + 8 + 3);
        assert!(lines[10].starts_with("Average"));
        assert!(lines[10].contains("0.500 ± 0.000"));
    }

    #[test]
    fn unmapped_event_is_an_error() {
        let targets = BTreeMap::new();
        assert!(build_report(&errs(&[1.0]), &targets, "fgd", false).is_err());
    }
}
