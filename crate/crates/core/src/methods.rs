//! Comparison de-drifting methods (polynomial fit, zero-phase high-pass,
//! plain wavelet approximation) and a common dispatcher that includes the
//! feature-guided pipeline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pipeline::{fgd_pipeline, wavelet_trend, FgdConfig, FgdOutput, WaveletSettings};
use crate::signal::SampledSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Fgd,
    Poly,
    Highpass,
    Wavelet,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [MethodId::Fgd, MethodId::Poly, MethodId::Highpass, MethodId::Wavelet];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Fgd => "fgd",
            MethodId::Poly => "poly",
            MethodId::Highpass => "highpass",
            MethodId::Wavelet => "wavelet",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            MethodId::Fgd => "Feature-Guided",
            MethodId::Poly => "Polynomial Fitting",
            MethodId::Highpass => "High-pass Filtering",
            MethodId::Wavelet => "Wavelet Decomposition",
        }
    }
}

impl std::fmt::Display for MethodId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgd" => Ok(MethodId::Fgd),
            "poly" => Ok(MethodId::Poly),
            "highpass" => Ok(MethodId::Highpass),
            "wavelet" => Ok(MethodId::Wavelet),
            other => Err(invalid(format!(
                "unknown method `{other}` (expected fgd, poly, highpass or wavelet)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method_id: MethodId,
    pub dedrifted: SampledSignal,
    pub trend: SampledSignal,
}

impl MethodResult {
    fn from_trend(method_id: MethodId, signal: &SampledSignal, trend: SampledSignal) -> Result<Self> {
        Ok(Self {
            method_id,
            dedrifted: signal.sub(&trend)?,
            trend,
        })
    }
}

/// Settings for the comparison methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodSettings {
    pub poly_order: usize,
    pub cutoff_hz: f64,
    pub highpass_order: usize,
    pub wavelet: WaveletSettings,
}

impl Default for MethodSettings {
    fn default() -> Self {
        Self {
            poly_order: 5,
            cutoff_hz: 0.3,
            highpass_order: 2,
            wavelet: WaveletSettings::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Polynomial fit

/// Least-squares polynomial in normalized time `u` in `[-1, 1]`, lowest
/// power first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    pub len: usize,
}

/// Normalized time of sample `k` out of `n`.
pub fn normalized_time(k: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        2.0 * k as f64 / (n - 1) as f64 - 1.0
    }
}

impl PolyFit {
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

pub fn poly_fit(signal: &SampledSignal, order: usize) -> Result<PolyFit> {
    let n = signal.len();
    if n <= order {
        return Err(invalid(format!(
            "polynomial order {order} needs more than {order} samples, got {n}"
        )));
    }
    let cols = order + 1;
    let design = DMatrix::from_fn(n, cols, |r, c| normalized_time(r, n).powi(c as i32));
    let rhs = DVector::from_column_slice(signal.samples());
    let qr = design.qr();
    let r = qr.r();
    let scale = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| r[(i, i)].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Numeric("rank-deficient polynomial design matrix".into()));
    }
    let qtb = qr.q().transpose() * rhs;
    let coeffs = r
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Numeric("singular triangular system".into()))?;
    Ok(PolyFit {
        coeffs: coeffs.iter().copied().collect(),
        len: n,
    })
}

pub fn poly_detrend(signal: &SampledSignal, order: usize) -> Result<MethodResult> {
    let fit = poly_fit(signal, order)?;
    let n = signal.len();
    let trend = (0..n).map(|k| fit.eval(normalized_time(k, n))).collect();
    MethodResult::from_trend(MethodId::Poly, signal, signal.with_samples(trend)?)
}

// ---------------------------------------------------------------------------
// Butterworth high-pass, applied forward and backward

/// Second-order section `b0 + b1 z^-1 + b2 z^-2 / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Steady-state transposed direct form II state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let gain = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1]);
        let z2 = self.b[2] - self.a[1] * gain;
        let z1 = self.b[1] - self.a[0] * gain + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs_hz: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / fs_hz;
        let (c1, s1, c2, s2) = (w.cos(), w.sin(), (2.0 * w).cos(), (2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, -(self.b[1] * s1 + self.b[2] * s2));
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, -(self.a[0] * s1 + self.a[1] * s2));
        (num.0.hypot(num.1)) / (den.0.hypot(den.1))
    }
}

/// Digital Butterworth high-pass as cascaded sections (bilinear transform
/// with pre-warped cutoff).
pub fn butterworth_highpass(order: usize, cutoff_hz: f64, fs_hz: f64) -> Result<Vec<Biquad>> {
    if order == 0 {
        return Err(invalid("high-pass order must be at least 1"));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs_hz / 2.0) {
        return Err(invalid(format!(
            "cutoff {cutoff_hz} Hz must lie strictly between 0 and {} Hz",
            fs_hz / 2.0
        )));
    }
    let k = (std::f64::consts::PI * cutoff_hz / fs_hz).tan();
    let mut sections = Vec::new();
    for i in 0..order / 2 {
        // Pole pair angle from the analog prototype.
        let theta = std::f64::consts::PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k * k);
        sections.push(Biquad {
            b: [norm, -2.0 * norm, norm],
            a: [2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm],
        });
    }
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        sections.push(Biquad {
            b: [norm, -norm, 0.0],
            a: [(k - 1.0) * norm, 0.0],
        });
    }
    Ok(sections)
}

fn sos_filter(sections: &[Biquad], x: &[f64], init_level: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    let mut level = init_level;
    for s in sections {
        let zi = s.step_state();
        let mut z = [zi[0] * level, zi[1] * level];
        for v in y.iter_mut() {
            let input = *v;
            let out = s.b[0] * input + z[0];
            z[0] = s.b[1] * input - s.a[0] * out + z[1];
            z[1] = s.b[2] * input - s.a[1] * out;
            *v = out;
        }
        level *= s.dc_gain();
    }
    y
}

/// Zero-phase filtering: odd-extended padding, forward pass, backward pass,
/// each pass started from the steady state of its first sample.
pub fn sosfiltfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let pad = (3 * (2 * sections.len() + 1)).min(n.saturating_sub(1));
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let fwd = sos_filter(sections, &ext, ext[0]);
    let rev: Vec<f64> = fwd.into_iter().rev().collect();
    let back = sos_filter(sections, &rev, rev[0]);
    let mut out: Vec<f64> = back.into_iter().rev().collect();
    out.drain(..pad);
    out.truncate(n);
    out
}

pub fn highpass_detrend(signal: &SampledSignal, cutoff_hz: f64, order: usize) -> Result<MethodResult> {
    let sections = butterworth_highpass(order, cutoff_hz, signal.fs_hz())?;
    let filtered = signal.with_samples(sosfiltfilt(&sections, signal.samples()))?;
    // Define the trend so that dedrifted + trend reproduces the input.
    let trend = signal.sub(&filtered)?;
    Ok(MethodResult {
        method_id: MethodId::Highpass,
        dedrifted: filtered,
        trend,
    })
}

// ---------------------------------------------------------------------------
// Plain wavelet approximation of the whole signal

pub fn wavelet_detrend_plain(signal: &SampledSignal, settings: &WaveletSettings) -> Result<MethodResult> {
    let trend = wavelet_trend(signal, settings)?;
    MethodResult::from_trend(MethodId::Wavelet, signal, trend)
}

/// Output of [`run_method`]; the pipeline intermediates are kept for the
/// feature-guided method.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub result: MethodResult,
    pub fgd: Option<FgdOutput>,
}

pub fn run_method(
    signal: &SampledSignal,
    method: MethodId,
    settings: &MethodSettings,
    fgd: &FgdConfig,
) -> Result<MethodRun> {
    let (result, fgd) = match method {
        MethodId::Fgd => {
            let out = fgd_pipeline(signal, fgd)?;
            let result = MethodResult {
                method_id: MethodId::Fgd,
                dedrifted: out.dedrifted.clone(),
                trend: out.trend.clone(),
            };
            (result, Some(out))
        }
        MethodId::Poly => (poly_detrend(signal, settings.poly_order)?, None),
        MethodId::Highpass => (highpass_detrend(signal, settings.cutoff_hz, settings.highpass_order)?, None),
        MethodId::Wavelet => (wavelet_detrend_plain(signal, &settings.wavelet)?, None),
    };
    Ok(MethodRun { result, fgd })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const FS: f64 = 250.0;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Solves `A^T A c = A^T y` by Gaussian elimination with partial pivoting.
    fn normal_equation_fit(y: &[f64], order: usize) -> Vec<f64> {
        let n = y.len();
        let p = order + 1;
        let mut m = vec![vec![0.0; p + 1]; p];
        for (k, &yk) in y.iter().enumerate() {
            let u = normalized_time(k, n);
            let pows: Vec<f64> = (0..p).map(|i| u.powi(i as i32)).collect();
            for i in 0..p {
                for j in 0..p {
                    m[i][j] += pows[i] * pows[j];
                }
                m[i][p] += pows[i] * yk;
            }
        }
        for col in 0..p {
            let piv = (col..p).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
            m.swap(col, piv);
            for row in 0..p {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for c in col..=p {
                        m[row][c] -= f * m[col][c];
                    }
                }
            }
        }
        (0..p).map(|i| m[i][p] / m[i][i]).collect()
    }

    #[test]
    fn poly_is_exact_on_quadratic() {
        let n = 500;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 / FS;
                0.3 - 0.02 * t + 0.004 * t * t
            })
            .collect();
        let s = SampledSignal::new(FS, x.clone()).unwrap();
        let r = poly_detrend(&s, 5).unwrap();
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(r.dedrifted.samples().iter().all(|v| v.abs() <= 1e-9 * scale));
    }

    #[test]
    fn poly_order_zero_is_mean() {
        let x = random(300, 4);
        let mean = x.iter().sum::<f64>() / 300.0;
        let r = poly_detrend(&SampledSignal::new(FS, x).unwrap(), 0).unwrap();
        assert!(r.trend.samples().iter().all(|t| (t - mean).abs() < 1e-12));
    }

    #[test]
    fn poly_matches_normal_equations() {
        let x = random(100, 11);
        let fit = poly_fit(&SampledSignal::new(FS, x.clone()).unwrap(), 5).unwrap();
        let oracle = normal_equation_fit(&x, 5);
        for (a, b) in fit.coeffs.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn poly_needs_enough_samples() {
        let s = SampledSignal::new(FS, vec![1.0, 2.0, 3.0]).unwrap();
        assert!(poly_detrend(&s, 3).is_err());
        assert!(poly_detrend(&s, 2).is_ok());
    }

    fn sine(freq: f64, secs: f64) -> SampledSignal {
        let n = (secs * FS) as usize;
        SampledSignal::new(
            FS,
            (0..n)
                .map(|k| (2.0 * std::f64::consts::PI * freq * k as f64 / FS).sin())
                .collect(),
        )
        .unwrap()
    }

    fn interior_rms(v: &[f64]) -> f64 {
        let e = (2.0 * FS) as usize;
        let s = &v[e..v.len() - e];
        (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt()
    }

    #[test]
    fn highpass_rejects_dc() {
        let s = SampledSignal::new(FS, vec![3.0; 5000]).unwrap();
        let r = highpass_detrend(&s, 0.3, 2).unwrap();
        let e = (2.0 * FS) as usize;
        assert!(r.dedrifted.samples()[e..5000 - e].iter().all(|v| v.abs() <= 1e-6 * 3.0));
    }

    #[test]
    fn highpass_passes_5hz() {
        let s = sine(5.0, 20.0);
        let r = highpass_detrend(&s, 0.3, 2).unwrap();
        let ratio = interior_rms(r.dedrifted.samples()) / interior_rms(s.samples());
        assert!((ratio - 1.0).abs() <= 0.01, "{ratio}");
    }

    #[test]
    fn highpass_attenuates_slow_drift() {
        let s = sine(0.05, 120.0);
        let r = highpass_detrend(&s, 0.3, 2).unwrap();
        let ratio = interior_rms(r.dedrifted.samples()) / interior_rms(s.samples());
        // Analytic forward-backward gain |H|^2 at 0.05 Hz.
        let sec = butterworth_highpass(2, 0.3, FS).unwrap();
        let h2 = sec[0].magnitude(0.05, FS).powi(2);
        assert!(h2 < 1e-3);
        assert!(ratio <= 0.10, "{ratio}");
        assert!((ratio - h2).abs() < 0.02, "{ratio} vs {h2}");
    }

    #[test]
    fn butterworth_magnitude_at_cutoff() {
        for order in 1..=5 {
            let sec = butterworth_highpass(order, 0.3, FS).unwrap();
            let mag: f64 = sec.iter().map(|s| s.magnitude(0.3, FS)).product();
            assert!((mag - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9, "order {order}");
        }
    }

    #[test]
    fn highpass_rejects_bad_cutoff() {
        let s = sine(1.0, 4.0);
        assert!(highpass_detrend(&s, 0.0, 2).is_err());
        assert!(highpass_detrend(&s, 125.0, 2).is_err());
        assert!(highpass_detrend(&s, 0.3, 0).is_err());
    }

    #[test]
    fn highpass_is_zero_phase() {
        let n = 6001;
        let mid = 3000i64;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let u = (k as i64 - mid) as f64 / 40.0;
                (-u * u).exp()
            })
            .collect();
        let r = highpass_detrend(&SampledSignal::new(FS, x).unwrap(), 0.3, 2).unwrap();
        let y = r.dedrifted.samples();
        let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let asym = (0..1500)
            .map(|j| (y[mid as usize - j] - y[mid as usize + j]).abs())
            .fold(0.0, f64::max);
        assert!(asym <= 1e-6 * peak, "{asym}");
    }

    #[test]
    fn every_method_reproduces_input() {
        let x: Vec<f64> = random(3000, 5)
            .iter()
            .enumerate()
            .map(|(k, v)| 0.01 * v + 0.1 * (k as f64 / 400.0).sin())
            .collect();
        let s = SampledSignal::new(FS, x.clone()).unwrap();
        for m in MethodId::ALL {
            let r = run_method(&s, m, &MethodSettings::default(), &FgdConfig::default())
                .unwrap()
                .result;
            assert_eq!(r.method_id, m);
            for k in 0..x.len() {
                let sum = r.dedrifted.samples()[k] + r.trend.samples()[k];
                assert!((sum - x[k]).abs() <= 1e-9 * x[k].abs().max(1e-3), "{m}");
            }
        }
    }

    #[test]
    fn wavelet_plain_on_constant() {
        let s = SampledSignal::new(FS, vec![-1.5; 4000]).unwrap();
        let r = wavelet_detrend_plain(&s, &WaveletSettings::default()).unwrap();
        assert!(r.dedrifted.samples().iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn method_names_parse() {
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
        assert!("kalman".parse::<MethodId>().is_err());
    }
}
