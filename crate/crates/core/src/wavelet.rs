//! One-dimensional multilevel discrete wavelet transform with orthonormal
//! Daubechies filters.
//!
//! Each analysis step convolves the current approximation with the low- and
//! high-pass decomposition filters and keeps every second output:
//!
//! ```text
//! a[n] = sum_k h[k] x[2n + 1 - k]      d[n] = sum_k g[k] x[2n + 1 - k]
//! ```
//!
//! where `x` is extended past its ends according to the [`BoundaryMode`].
//! A step maps `N` samples to `floor((N + L - 1) / 2)` coefficients for a
//! filter of length `L`. Because the filter bank is orthonormal, the
//! synthesis step is the transpose of the analysis step and reconstructs
//! the input exactly whatever the extension.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::SampledSignal;

const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB4: [f64; 8] = [
    -0.010597401785069032,
    0.0328830116668852,
    0.030841381835560764,
    -0.18703481171909309,
    -0.027983769416859854,
    0.6308807679298589,
    0.7148465705529157,
    0.2303778133088965,
];

const DB8: [f64; 16] = [
    -0.00011747678412476953,
    0.0006754494064505693,
    -0.00039174037337694705,
    -0.004870352993451574,
    0.008746094047405777,
    0.013981027917398282,
    -0.044088253930794755,
    -0.017369301001807547,
    0.12874742662047847,
    0.0004724845739132828,
    -0.2840155429615469,
    -0.015829105256349306,
    0.5853546836542067,
    0.6756307362972898,
    0.31287159091429995,
    0.05441584224310401,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    #[default]
    Db4,
    Db8,
}

impl WaveletFamily {
    pub const ALL: [WaveletFamily; 3] = [WaveletFamily::Haar, WaveletFamily::Db4, WaveletFamily::Db8];

    /// Low-pass decomposition filter `h`.
    pub fn dec_lo(self) -> &'static [f64] {
        match self {
            WaveletFamily::Haar => &HAAR,
            WaveletFamily::Db4 => &DB4,
            WaveletFamily::Db8 => &DB8,
        }
    }

    /// High-pass decomposition filter `g[k] = (-1)^(k+1) h[L-1-k]`.
    pub fn dec_hi(self) -> Vec<f64> {
        let h = self.dec_lo();
        let l = h.len();
        (0..l)
            .map(|k| if k % 2 == 0 { -h[l - 1 - k] } else { h[l - 1 - k] })
            .collect()
    }

    pub fn filter_len(self) -> usize {
        self.dec_lo().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db4 => "db4",
            WaveletFamily::Db8 => "db8",
        }
    }
}

impl std::str::FromStr for WaveletFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "db4" => Ok(WaveletFamily::Db4),
            "db8" => Ok(WaveletFamily::Db8),
            other => Err(invalid(format!(
                "unknown wavelet family `{other}` (expected haar, db4 or db8)"
            ))),
        }
    }
}

/// Signal extension used past either end during analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Half-sample mirror: `... x1 x0 | x0 x1 ... x(n-1) | x(n-1) x(n-2) ...`
    #[default]
    Symmetric,
    Periodic,
    Zero,
}

impl BoundaryMode {
    pub const ALL: [BoundaryMode; 3] = [BoundaryMode::Symmetric, BoundaryMode::Periodic, BoundaryMode::Zero];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::Symmetric => "symmetric",
            BoundaryMode::Periodic => "periodic",
            BoundaryMode::Zero => "zero",
        }
    }

    fn sample(self, x: &[f64], k: isize) -> f64 {
        let n = x.len() as isize;
        if (0..n).contains(&k) {
            return x[k as usize];
        }
        match self {
            BoundaryMode::Zero => 0.0,
            BoundaryMode::Periodic => x[k.rem_euclid(n) as usize],
            BoundaryMode::Symmetric => {
                // Reflection has period 2n.
                let r = k.rem_euclid(2 * n);
                let idx = if r < n { r } else { 2 * n - 1 - r };
                x[idx as usize]
            }
        }
    }
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symmetric" => Ok(BoundaryMode::Symmetric),
            "periodic" => Ok(BoundaryMode::Periodic),
            "zero" => Ok(BoundaryMode::Zero),
            other => Err(invalid(format!(
                "unknown boundary mode `{other}` (expected symmetric, periodic or zero)"
            ))),
        }
    }
}

/// Deepest level at which the approximation is still at least as long as
/// the filter support: `floor(log2(len / (L - 1)))`.
pub fn max_level(len: usize, family: WaveletFamily) -> usize {
    let support = family.filter_len() - 1;
    if len < support || support == 0 {
        return 0;
    }
    let mut level = 0;
    while (len >> (level + 1)) >= support {
        level += 1;
    }
    level
}

/// Coefficients of a multilevel decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomposition {
    pub level: usize,
    pub family: WaveletFamily,
    pub boundary_mode: BoundaryMode,
    /// Approximation coefficients at the deepest level.
    pub approx_coeffs: Vec<f64>,
    /// Detail coefficients, `detail_coeffs[j - 1]` holding level `j`.
    pub detail_coeffs: Vec<Vec<f64>>,
    /// Length of the approximation entering each level (`lengths[0]` is the
    /// input length).
    pub lengths: Vec<usize>,
    pub fs_hz: f64,
    pub t0_s: f64,
}

fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64], mode: BoundaryMode) -> (Vec<f64>, Vec<f64>) {
    let l = lo.len();
    let out_len = (x.len() + l - 1) / 2;
    let mut a = Vec::with_capacity(out_len);
    let mut d = Vec::with_capacity(out_len);
    let n = x.len() as isize;
    for i in 0..out_len {
        let base = 2 * i as isize + 1;
        let (mut sa, mut sd) = (0.0, 0.0);
        if base >= l as isize - 1 && base < n {
            // Interior: no extension needed.
            for k in 0..l {
                let v = x[(base - k as isize) as usize];
                sa += lo[k] * v;
                sd += hi[k] * v;
            }
        } else {
            for k in 0..l {
                let v = mode.sample(x, base - k as isize);
                sa += lo[k] * v;
                sd += hi[k] * v;
            }
        }
        a.push(sa);
        d.push(sd);
    }
    (a, d)
}

/// Transpose of [`analysis_step`]: `x[k] = sum_n a[n] h[2n+1-k] + d[n] g[2n+1-k]`.
/// Either band may be omitted (treated as zero).
fn synthesis_step(
    a: Option<&[f64]>,
    d: Option<&[f64]>,
    lo: &[f64],
    hi: &[f64],
    out_len: usize,
) -> Vec<f64> {
    let l = lo.len();
    let coeff_len = a.or(d).map_or(0, <[f64]>::len);
    let mut out = vec![0.0; out_len];
    for n in 0..coeff_len {
        let base = 2 * n + 1;
        let ca = a.map_or(0.0, |a| a[n]);
        let cd = d.map_or(0.0, |d| d[n]);
        for k in 0..l {
            if base < k {
                break;
            }
            let idx = base - k;
            if idx < out_len {
                out[idx] += ca * lo[k] + cd * hi[k];
            }
        }
    }
    out
}

/// Decomposes a signal to `level` levels.
pub fn dwt_multilevel(
    signal: &SampledSignal,
    level: usize,
    family: WaveletFamily,
    boundary_mode: BoundaryMode,
) -> Result<WaveletDecomposition> {
    let max = max_level(signal.len(), family);
    if level == 0 || level > max {
        return Err(Error::InfeasibleLevel {
            requested: level,
            max,
            len: signal.len(),
        });
    }
    let lo = family.dec_lo();
    let hi = family.dec_hi();
    let mut approx = signal.samples().to_vec();
    let mut lengths = vec![approx.len()];
    let mut details = Vec::with_capacity(level);
    for _ in 0..level {
        let (a, d) = analysis_step(&approx, lo, &hi, boundary_mode);
        details.push(d);
        approx = a;
        lengths.push(approx.len());
    }
    Ok(WaveletDecomposition {
        level,
        family,
        boundary_mode,
        approx_coeffs: approx,
        detail_coeffs: details,
        lengths,
        fs_hz: signal.fs_hz(),
        t0_s: signal.t0_s(),
    })
}

/// Which bands take part in a synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    All,
    Approx,
    /// Detail band of level `j` (1-based).
    Detail(usize),
}

impl WaveletDecomposition {
    /// Synthesizes the signal from the selected band(s), all other
    /// coefficients taken as zero.
    pub fn reconstruct_band(&self, band: Band) -> Vec<f64> {
        let lo = self.family.dec_lo();
        let hi = self.family.dec_hi();
        let use_detail = |j: usize| matches!(band, Band::All) || band == Band::Detail(j);
        let mut current: Option<Vec<f64>> = match band {
            Band::All | Band::Approx => Some(self.approx_coeffs.clone()),
            Band::Detail(_) => None,
        };
        for j in (1..=self.level).rev() {
            let d = use_detail(j).then(|| self.detail_coeffs[j - 1].as_slice());
            let out_len = self.lengths[j - 1];
            current = if current.is_none() && d.is_none() {
                None
            } else {
                Some(synthesis_step(current.as_deref(), d, lo, &hi, out_len))
            };
        }
        current.unwrap_or_else(|| vec![0.0; self.lengths[0]])
    }

    /// Full inverse transform.
    pub fn inverse(&self) -> Vec<f64> {
        self.reconstruct_band(Band::All)
    }
}

/// Low-frequency trend: the synthesis from the deepest approximation with
/// every detail band zeroed, fitted to `original_len` samples.
pub fn approx_trend(decomp: &WaveletDecomposition, original_len: usize) -> Result<SampledSignal> {
    let mut trend = decomp.reconstruct_band(Band::Approx);
    if original_len == 0 {
        return Err(invalid("trend length must be positive"));
    }
    let last = *trend.last().unwrap_or(&0.0);
    trend.resize(original_len, last);
    SampledSignal::with_start(decomp.fs_hz, decomp.t0_s, trend)
}

/// `signal - trend`, pointwise.
pub fn dedrift(signal: &SampledSignal, trend: &SampledSignal) -> Result<SampledSignal> {
    signal.sub(trend)
}
