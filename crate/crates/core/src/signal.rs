//! Uniformly sampled scalar signals, lagged differentiation and summary
//! statistics.

use crate::error::{invalid, Result};

/// Default lag (in samples) of the differentiator.
pub const DEFAULT_LAG: usize = 3;

/// Default sampling rate used when generating data.
pub const DEFAULT_FS_HZ: f64 = 250.0;

/// A uniformly sampled real-valued time series.
///
/// The sample unit depends on the stage: volts for raw EOG, volts per second
/// for derivatives, degrees for gaze.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    fs_hz: f64,
    t0_s: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(fs_hz: f64, samples: Vec<f64>) -> Result<Self> {
        Self::with_start(fs_hz, 0.0, samples)
    }

    pub fn with_start(fs_hz: f64, t0_s: f64, samples: Vec<f64>) -> Result<Self> {
        if !(fs_hz.is_finite() && fs_hz > 0.0) {
            return Err(invalid(format!("sampling rate must be positive, got {fs_hz}")));
        }
        if !t0_s.is_finite() {
            return Err(invalid("start time must be finite"));
        }
        if samples.is_empty() {
            return Err(invalid("signal must contain at least one sample"));
        }
        if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("sample {k} is not finite")));
        }
        Ok(Self {
            fs_hz,
            t0_s,
            samples,
        })
    }

    /// Builds a signal on the same time grid as `self` with new sample values.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(invalid(format!(
                "length mismatch: expected {} samples, got {}",
                self.samples.len(),
                samples.len()
            )));
        }
        Self::with_start(self.fs_hz, self.t0_s, samples)
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn t0_s(&self) -> f64 {
        self.t0_s
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fs_hz
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time in seconds of sample `k`.
    pub fn time_at(&self, k: usize) -> f64 {
        self.t0_s + k as f64 / self.fs_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs_hz
    }

    /// Number of samples spanning `seconds`, rounded to nearest.
    pub fn samples_for(&self, seconds: f64) -> usize {
        (seconds * self.fs_hz).round().max(0.0) as usize
    }

    pub(crate) fn check_aligned(&self, other: &SampledSignal, what: &str) -> Result<()> {
        if self.len() != other.len() {
            return Err(invalid(format!(
                "{what}: length mismatch ({} vs {} samples)",
                self.len(),
                other.len()
            )));
        }
        if (self.fs_hz - other.fs_hz).abs() > 1e-9 * self.fs_hz {
            return Err(invalid(format!(
                "{what}: sampling rate mismatch ({} vs {} Hz)",
                self.fs_hz, other.fs_hz
            )));
        }
        Ok(())
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.check_aligned(other, "subtract")?;
        let out = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        self.with_samples(out)
    }

    /// Pointwise `self + other`.
    pub fn add(&self, other: &SampledSignal) -> Result<SampledSignal> {
        self.check_aligned(other, "add")?;
        let out = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        self.with_samples(out)
    }

    pub fn stats(&self) -> SignalStats {
        stats(self)
    }
}

/// Mean, population standard deviation and range of a signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalStats {
    pub mean: f64,
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

pub fn stats(signal: &SampledSignal) -> SignalStats {
    slice_stats(signal.samples())
}

/// Statistics over a non-empty slice; population (1/n) standard deviation.
pub(crate) fn slice_stats(xs: &[f64]) -> SignalStats {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let (min, max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    SignalStats {
        mean: mean.clamp(min, max),
        std_dev: var.sqrt(),
        min,
        max,
    }
}

/// Lagged difference quotient `(x[k] - x[k - lag]) / (lag * dt)`.
///
/// The first `lag_n` outputs are zero so the result stays on the input's
/// sampling grid.
pub fn differentiate(signal: &SampledSignal, lag_n: usize) -> Result<SampledSignal> {
    if lag_n == 0 {
        return Err(invalid("differentiation lag must be at least 1"));
    }
    if lag_n >= signal.len() {
        return Err(invalid(format!(
            "differentiation lag {lag_n} must be shorter than the signal ({} samples)",
            signal.len()
        )));
    }
    let x = signal.samples();
    let span = lag_n as f64 * signal.dt();
    let mut out = vec![0.0; x.len()];
    for k in lag_n..x.len() {
        out[k] = (x[k] - x[k - lag_n]) / span;
    }
    signal.with_samples(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sig(fs: f64, xs: &[f64]) -> SampledSignal {
        SampledSignal::new(fs, xs.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(SampledSignal::new(0.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(-5.0, vec![1.0]).is_err());
        assert!(SampledSignal::new(10.0, vec![]).is_err());
        assert!(SampledSignal::new(10.0, vec![1.0, f64::NAN]).is_err());
        assert!(SampledSignal::new(10.0, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let d = differentiate(&sig(10.0, &[5.0; 5]), 1).unwrap();
        assert!(d.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_of_unit_ramp() {
        let ramp: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let d = differentiate(&sig(1.0, &ramp), 3).unwrap();
        assert_eq!(&d.samples()[..3], &[0.0, 0.0, 0.0]);
        for &v in &d.samples()[3..] {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_of_step_by_hand() {
        let d = differentiate(&sig(100.0, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 3).unwrap();
        assert_eq!(&d.samples()[..3], &[0.0, 0.0, 0.0]);
        for &v in &d.samples()[3..] {
            assert_relative_eq!(v, 1.0 / 0.03, max_relative = 1e-12);
        }
    }

    #[test]
    fn lag_must_be_shorter_than_signal() {
        assert!(differentiate(&sig(10.0, &[1.0, 2.0, 3.0]), 3).is_err());
        assert!(differentiate(&sig(10.0, &[1.0, 2.0, 3.0]), 0).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = stats(&sig(1.0, &[1.0, 1.0, 1.0]));
        assert_eq!((s.mean, s.std_dev, s.min, s.max), (1.0, 0.0, 1.0, 1.0));
        let s = stats(&sig(1.0, &[0.0, 2.0]));
        assert_eq!((s.mean, s.std_dev), (1.0, 1.0));
        let s = stats(&sig(1.0, &[1.0, 2.0, 3.0, 4.0]));
        assert_relative_eq!(s.mean, 2.5);
        // sqrt(((1.5^2 + 0.5^2) * 2) / 4) = sqrt(1.25)
        assert_relative_eq!(s.std_dev, 1.25f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn sub_requires_alignment() {
        let a = sig(10.0, &[1.0, 2.0]);
        assert!(a.sub(&sig(10.0, &[1.0])).is_err());
        assert!(a.sub(&sig(20.0, &[1.0, 2.0])).is_err());
    }

    proptest! {
        #[test]
        fn derivative_is_linear(
            xs in prop::collection::vec(-10.0f64..10.0, 8..64),
            ys_seed in prop::collection::vec(-10.0f64..10.0, 64),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            lag in 1usize..6,
        ) {
            let n = xs.len();
            prop_assume!(lag < n);
            let ys = &ys_seed[..n];
            let combo: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| a * x + b * y).collect();
            let dx = differentiate(&sig(50.0, &xs), lag).unwrap();
            let dy = differentiate(&sig(50.0, ys), lag).unwrap();
            let dc = differentiate(&sig(50.0, &combo), lag).unwrap();
            prop_assert_eq!(dc.len(), n);
            for k in lag..n {
                let expect = a * dx.samples()[k] + b * dy.samples()[k];
                prop_assert!((dc.samples()[k] - expect).abs() <= 1e-9 * (1.0 + expect.abs()));
            }
        }

        #[test]
        fn offset_leaves_derivative_unchanged(
            xs in prop::collection::vec(-10.0f64..10.0, 8..64),
            c in -100.0f64..100.0,
        ) {
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let d0 = differentiate(&sig(250.0, &xs), 3).unwrap();
            let d1 = differentiate(&sig(250.0, &shifted), 3).unwrap();
            for (p, q) in d0.samples().iter().zip(d1.samples()) {
                prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()) * 250.0);
            }
        }
    }
}
