//! Breathing-rate detection from a single conditioned series.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

/// Band membership slack for frequencies that sit on a band edge up to rounding.
pub(crate) const BAND_EPS_HZ: f64 = 1e-9;

/// Periodogram `|DFT(x − mean)|²` on a signed frequency grid.
///
/// No window and no normalization: for an unpadded series of length `N`,
/// `Σ power = N · Σ |x − mean|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Frequency of each bin in DFT order: `k·f_s/N` for `k ≤ N/2`, `(k−N)·f_s/N` above.
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Set when the input was real, so the spectrum is even in frequency.
    pub real_input: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Non-negative frequencies with mirrored bins folded in (DC and Nyquist unchanged).
    pub fn one_sided(&self) -> Spectrum {
        let n = self.len();
        let mut freqs = Vec::with_capacity(n / 2 + 1);
        let mut power = Vec::with_capacity(n / 2 + 1);
        for k in 0..=n / 2 {
            let mirror = (n - k) % n;
            let p = if mirror == k {
                self.power[k]
            } else {
                self.power[k] + self.power[mirror]
            };
            freqs.push(self.freqs[k]);
            power.push(p);
        }
        Spectrum {
            freqs,
            power,
            real_input: self.real_input,
        }
    }

    /// `(frequency, power)` of the largest bin; the lowest index wins ties.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        let mut best: Option<usize> = None;
        for (k, &p) in self.power.iter().enumerate() {
            if best.is_none_or(|b| p > self.power[b]) {
                best = Some(k);
            }
        }
        best.map(|k| (self.freqs[k], self.power[k]))
    }
}

pub(crate) fn signed_freq(k: usize, n: usize, fs: f64) -> f64 {
    if k <= n / 2 {
        k as f64 * fs / n as f64
    } else {
        (k as f64 - n as f64) * fs / n as f64
    }
}

pub(crate) struct Periodogram {
    len: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Periodogram {
    pub(crate) fn new(len: usize) -> Self {
        Self {
            len,
            fft: FftPlanner::new().plan_fft_forward(len),
        }
    }

    /// Power of the mean-removed `x`, zero-padded to the planned length.
    pub(crate) fn power(&self, x: &[Complex64]) -> Vec<f64> {
        let mean = x.iter().sum::<Complex64>() / x.len() as f64;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, v) in buf.iter_mut().zip(x) {
            *b = v - mean;
        }
        self.fft.process(&mut buf);
        buf.iter().map(|z| z.norm_sqr()).collect()
    }
}

/// Padded DFT length for a target resolution: `max(N, ⌈f_s/resolution⌉)`.
fn padded_len(n: usize, fs: f64, resolution_hz: Option<f64>) -> usize {
    match resolution_hz {
        Some(r) if r > 0.0 => n.max((fs / r - 1e-9).ceil() as usize),
        _ => n,
    }
}

/// Periodogram of the mean-removed series, optionally zero-padded so the
/// grid spacing is at most `pad_to_resolution` Hz.
pub fn psd(x: &Series, fs: f64, pad_to_resolution: Option<f64>) -> Spectrum {
    let data = x.to_complex();
    let n = padded_len(data.len(), fs, pad_to_resolution);
    let power = if data.is_empty() {
        vec![0.0; n]
    } else {
        Periodogram::new(n).power(&data)
    };
    Spectrum {
        freqs: (0..n).map(|k| signed_freq(k, n, fs)).collect(),
        power,
        real_input: x.is_real(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectMethod {
    Peak,
    Psd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostics {
    /// Surviving peaks after fake-peak removal.
    PeakCount(usize),
    /// Height of the winning (pairwise-summed) PSD bin.
    PsdPeak(f64),
}

/// Where the estimated series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// CSI entry `(i, j, m)`.
    Frequency,
    /// CIR bin `(i, j, k)`.
    Delay,
    /// Phase difference `(i, k, m)`.
    PhaseDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub domain: Domain,
    pub tx: usize,
    /// RX antenna, or RX pair for phase differences.
    pub rx: usize,
    /// Subcarrier or delay bin.
    pub bin: usize,
}

/// Result of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreathingEstimate {
    /// `None` when the window was rejected by the stability gate.
    pub rate_hz: Option<f64>,
    pub method: DetectMethod,
    /// Stability-gate outcome: `true` when the window was stable enough to estimate.
    pub stable: bool,
    pub stability_score: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
    pub candidate: Option<Provenance>,
    pub candidate_score: Option<f64>,
}

impl BreathingEstimate {
    pub fn rate_bpm(&self) -> Option<f64> {
        self.rate_hz.map(|r| 60.0 * r)
    }

    /// Estimate for a window that failed the stability gate with score `q`.
    pub fn rejected(method: DetectMethod, q: f64) -> Self {
        Self {
            rate_hz: None,
            method,
            stable: false,
            stability_score: Some(q),
            diagnostics: None,
            candidate: None,
            candidate_score: None,
        }
    }

    fn detected(rate_hz: f64, method: DetectMethod, diagnostics: Diagnostics) -> Self {
        Self {
            rate_hz: Some(rate_hz),
            method,
            stable: true,
            stability_score: None,
            diagnostics: Some(diagnostics),
            candidate: None,
            candidate_score: None,
        }
    }
}

/// Default zero-padded resolution for [`psd_detect`].
pub const PSD_RESOLUTION_HZ: f64 = 0.001;

/// Maximum-PSD rate search in `f_low ≤ |f| ≤ f_high` at 0.001 Hz resolution.
pub fn psd_detect(x: &Series, fs: f64, f_low: f64, f_high: f64) -> Result<BreathingEstimate> {
    psd_detect_with(x, fs, f_low, f_high, PSD_RESOLUTION_HZ)
}

/// As [`psd_detect`] with an explicit grid resolution. Positive and negative
/// frequency bins are summed pairwise before the argmax.
pub fn psd_detect_with(
    x: &Series,
    fs: f64,
    f_low: f64,
    f_high: f64,
    resolution_hz: f64,
) -> Result<BreathingEstimate> {
    if x.len() < 2 {
        return Err(Error::validation("PSD detection needs at least 2 samples"));
    }
    if !(fs > 0.0 && f_low >= 0.0 && f_low < f_high) {
        return Err(Error::validation(format!(
            "invalid band [{f_low}, {f_high}] Hz at f_s = {fs} Hz"
        )));
    }
    let spec = psd(x, fs, Some(resolution_hz));
    let n = spec.len();
    let mut best: Option<(f64, f64)> = None;
    for k in 1..=n / 2 {
        let f = spec.freqs[k];
        if f < f_low - BAND_EPS_HZ || f > f_high + BAND_EPS_HZ {
            continue;
        }
        let mirror = n - k;
        let p = if mirror == k {
            spec.power[k]
        } else {
            spec.power[k] + spec.power[mirror]
        };
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((f, p));
        }
    }
    let (f, p) = best.ok_or(Error::EmptyBand {
        low: f_low,
        high: f_high,
    })?;
    Ok(BreathingEstimate::detected(f, DetectMethod::Psd, Diagnostics::PsdPeak(p)))
}

/// Fake-peak removal parameters for [`peak_detect_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// Highest plausible rate; peaks closer than `1/f_max` seconds are merged.
    pub f_max_hz: f64,
    /// Minimum prominence as a multiple of the series' standard deviation.
    pub prominence_factor: f64,
}

impl PeakConfig {
    pub fn new(f_max_hz: f64) -> Self {
        Self {
            f_max_hz,
            prominence_factor: 0.2,
        }
    }
}

/// Strict local maxima of `x`.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1))
        .filter(|&k| x[k] > x[k - 1] && x[k] > x[k + 1])
        .collect()
}

/// Topographic prominence: height above the higher of the two lowest points
/// reached before climbing to something taller (or hitting an end).
fn prominence(x: &[f64], k: usize) -> f64 {
    let h = x[k];
    let mut left_min = h;
    for &v in x[..k].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[k + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn std_dev(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

/// Average peak-to-peak interval with default fake-peak removal.
pub fn peak_detect(x: &[f64], fs: f64, f_max: f64) -> Result<BreathingEstimate> {
    peak_detect_with(x, fs, &PeakConfig::new(f_max))
}

/// Local maxima, then a left-to-right separation sweep (within `1/f_max`
/// seconds keep the higher peak), then a prominence floor. The rate is the
/// reciprocal of the mean spacing between surviving peaks.
pub fn peak_detect_with(x: &[f64], fs: f64, cfg: &PeakConfig) -> Result<BreathingEstimate> {
    if x.len() < 3 {
        return Err(Error::validation("peak detection needs at least 3 samples"));
    }
    if !(fs > 0.0 && cfg.f_max_hz > 0.0) {
        return Err(Error::validation("sampling rate and f_max must be positive"));
    }
    let min_gap = fs / cfg.f_max_hz;
    let mut kept: Vec<usize> = Vec::new();
    for k in local_maxima(x) {
        match kept.last() {
            Some(&prev) if ((k - prev) as f64) < min_gap => {
                if x[k] > x[prev] {
                    *kept.last_mut().unwrap() = k;
                }
            }
            _ => kept.push(k),
        }
    }
    let floor = cfg.prominence_factor * std_dev(x);
    kept.retain(|&k| prominence(x, k) >= floor);
    if kept.len() < 2 {
        return Err(Error::Estimation(format!(
            "only {} peak(s) survived fake-peak removal",
            kept.len()
        )));
    }
    let span = (kept[kept.len() - 1] - kept[0]) as f64 / fs;
    let mean_spacing = span / (kept.len() - 1) as f64;
    Ok(BreathingEstimate::detected(
        1.0 / mean_spacing,
        DetectMethod::Peak,
        Diagnostics::PeakCount(kept.len()),
    ))
}
