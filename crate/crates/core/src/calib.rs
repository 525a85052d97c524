//! Removal of AGC and phase-offset distortion.
//!
//! * [`amplitude_calibrate`] divides every snapshot by the RMS-style energy of
//!   its dominant CIR path, which cancels any per-snapshot gain.
//! * [`phase_calibrate`] fits a line to the phase of RX antenna `j` over its
//!   strongest run of subcarriers and removes that line from antenna
//!   `(j+1) mod N_R`. Offsets shared by all RX antennas cancel.
//! * [`phase_difference`] is the classic alternative: the wrapped phase
//!   difference between adjacent RX antennas.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;

use crate::csi::{CsiSampleSet, RadioMeta, SampleTensor, SliceTransform};
use crate::error::{Error, Result};

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

/// Sequential unwrap: add ±2π whenever a step exceeds π in magnitude.
pub fn unwrap_phase(phase: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phase.len());
    let mut offset = 0.0;
    for (k, &p) in phase.iter().enumerate() {
        if k > 0 {
            let step = p - phase[k - 1];
            if step > PI {
                offset -= 2.0 * PI * ((step + PI) / (2.0 * PI)).floor();
            } else if step < -PI {
                offset += 2.0 * PI * ((-step + PI) / (2.0 * PI)).floor();
            }
        }
        out.push(p + offset);
    }
    out
}

/// Dominant-path amplitude calibration with a `2D+1` bin energy window.
pub fn amplitude_calibrate(csi: &CsiSampleSet, half_width: usize) -> Result<CsiSampleSet> {
    let meta = *csi.meta();
    let m = meta.num_subcarriers;
    let width = 2 * half_width + 1;
    if width > m {
        return Err(Error::validation(format!(
            "dominant-path window 2D+1 = {width} exceeds M = {m}"
        )));
    }
    let mut cir = csi.data().to_vec();
    SliceTransform::new(m).to_delay(&mut cir);

    let mut out = Vec::with_capacity(meta.len());
    for t in 0..meta.num_snapshots {
        for i in 0..meta.num_tx {
            for j in 0..meta.num_rx {
                let off = meta.slice_offset(t, i, j);
                let h = &cir[off..off + m];
                let mut peak = 0;
                for (k, z) in h.iter().enumerate() {
                    if z.norm_sqr() > h[peak].norm_sqr() {
                        peak = k;
                    }
                }
                if h[peak].norm_sqr() == 0.0 {
                    return Err(Error::NoDominantPath { t, tx: i, rx: j });
                }
                let energy: f64 = (0..width)
                    .map(|d| h[(peak + m + d - half_width) % m].norm_sqr())
                    .sum();
                let inv = width as f64 / energy.sqrt();
                out.extend(csi.slice(t, i, j).iter().map(|z| z * inv));
            }
        }
    }
    Ok(CsiSampleSet::from_parts_unchecked(meta, out))
}

/// Line `slope·m + intercept` fitted to the phase over `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPhaseFit {
    /// Radians per subcarrier index.
    pub slope: f64,
    /// Radians, wrapped into `(−π, π]`.
    pub intercept: f64,
    /// Subcarrier indices used for the fit.
    pub window: Range<usize>,
}

impl LinearPhaseFit {
    pub fn at(&self, m: usize) -> f64 {
        self.slope * m as f64 + self.intercept
    }
}

/// Fit a line to the unwrapped phase of the strongest contiguous run of
/// `window_len` subcarriers (largest summed amplitude, lowest start on ties).
pub fn fit_linear_phase(slice: &[Complex64], window_len: usize) -> Result<LinearPhaseFit> {
    if window_len < 2 || window_len > slice.len() {
        return Err(Error::validation(format!(
            "fit window must be in [2, {}], got {window_len}",
            slice.len()
        )));
    }
    let amp: Vec<f64> = slice.iter().map(|z| z.norm()).collect();
    if amp.iter().all(|&a| a == 0.0) {
        return Err(Error::DegenerateFit);
    }
    // Exact per-run sums; a running sum drifts and breaks ties.
    let mut best_start = 0;
    let mut best: f64 = amp[..window_len].iter().sum();
    for start in 1..=slice.len() - window_len {
        let sum: f64 = amp[start..start + window_len].iter().sum();
        if sum > best {
            best = sum;
            best_start = start;
        }
    }
    let window = best_start..best_start + window_len;
    let phase: Vec<f64> = slice[window.clone()].iter().map(|z| z.arg()).collect();
    let y = unwrap_phase(&phase);

    let n = window_len as f64;
    let x_mean = window.clone().map(|m| m as f64).sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (m, &yv) in window.clone().zip(&y) {
        let dx = m as f64 - x_mean;
        sxy += dx * (yv - y_mean);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    Ok(LinearPhaseFit {
        slope,
        intercept: wrap_phase(y_mean - slope * x_mean),
        window,
    })
}

/// Adjacent-antenna linear phase calibration.
///
/// All fits are taken from the input before any antenna is modified, so
/// antenna 0 is calibrated with the fit of antenna `N_R − 1`.
pub fn phase_calibrate(csi: &CsiSampleSet, window_len: usize) -> Result<CsiSampleSet> {
    let meta = *csi.meta();
    let nr = meta.num_rx;
    let mut out = csi.data().to_vec();
    for t in 0..meta.num_snapshots {
        for i in 0..meta.num_tx {
            let fits = (0..nr)
                .map(|j| fit_linear_phase(csi.slice(t, i, j), window_len))
                .collect::<Result<Vec<_>>>()?;
            for (j, fit) in fits.iter().enumerate() {
                let target = (j + 1) % nr;
                let off = meta.slice_offset(t, i, target);
                for (m, z) in out[off..off + meta.num_subcarriers].iter_mut().enumerate() {
                    *z *= Complex64::from_polar(1.0, -fit.at(m));
                }
            }
        }
    }
    Ok(CsiSampleSet::from_parts_unchecked(meta, out))
}

/// Real tensor `[t][i][k][m]` of RX phase differences, `k ∈ [0, N_R−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiffSet {
    num_snapshots: usize,
    num_tx: usize,
    num_pairs: usize,
    num_subcarriers: usize,
    snapshot_rate_hz: f64,
    data: Vec<f64>,
}

impl PhaseDiffSet {
    pub fn new(
        dims: [usize; 4],
        snapshot_rate_hz: f64,
        data: Vec<f64>,
    ) -> Result<Self> {
        let [t, nt, np, m] = dims;
        if t == 0 || nt == 0 || np == 0 || m == 0 {
            return Err(Error::validation("phase-difference dimensions must be non-zero"));
        }
        if data.len() != t * nt * np * m {
            return Err(Error::validation(format!(
                "phase-difference data length {} does not match {t}x{nt}x{np}x{m}",
                data.len()
            )));
        }
        if !(snapshot_rate_hz.is_finite() && snapshot_rate_hz > 0.0) {
            return Err(Error::validation("snapshot rate must be positive"));
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            num_snapshots: t,
            num_tx: nt,
            num_pairs: np,
            num_subcarriers: m,
            snapshot_rate_hz,
            data,
        })
    }

    /// `[T, N_T, N_R − 1, M]`
    pub fn dims(&self) -> [usize; 4] {
        [
            self.num_snapshots,
            self.num_tx,
            self.num_pairs,
            self.num_subcarriers,
        ]
    }

    pub fn snapshot_rate_hz(&self) -> f64 {
        self.snapshot_rate_hz
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, k: usize, m: usize) -> usize {
        ((t * self.num_tx + i) * self.num_pairs + k) * self.num_subcarriers + m
    }

    pub fn get(&self, t: usize, i: usize, k: usize, m: usize) -> f64 {
        self.data[self.index(t, i, k, m)]
    }

    pub fn series(&self, i: usize, k: usize, m: usize) -> Vec<f64> {
        (0..self.num_snapshots)
            .map(|t| self.get(t, i, k, m))
            .collect()
    }

    /// Number of `(i, k, m)` series.
    pub fn num_series(&self) -> usize {
        self.num_tx * self.num_pairs * self.num_subcarriers
    }

    /// `(i, k, m)` of the `n`-th series in lexicographic order.
    pub fn series_index(&self, n: usize) -> (usize, usize, usize) {
        let m = n % self.num_subcarriers;
        let rest = n / self.num_subcarriers;
        (rest / self.num_pairs, rest % self.num_pairs, m)
    }

    /// Replace every series by `f(series)`; `f` must preserve length.
    pub fn map_series(&self, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<Self> {
        let mut data = vec![0.0; self.data.len()];
        for n in 0..self.num_series() {
            let (i, k, m) = self.series_index(n);
            let mapped = f(&self.series(i, k, m))?;
            if mapped.len() != self.num_snapshots {
                return Err(Error::validation("series map changed the series length"));
            }
            for (t, v) in mapped.into_iter().enumerate() {
                let idx = self.index(t, i, k, m);
                data[idx] = v;
            }
        }
        Self::new(self.dims(), self.snapshot_rate_hz, data)
    }
}

/// Wrapped phase difference between RX antennas `k` and `k+1`.
pub fn phase_difference(csi: &CsiSampleSet) -> PhaseDiffSet {
    let meta: RadioMeta = *csi.meta();
    let pairs = meta.num_rx - 1;
    let mut data = Vec::with_capacity(meta.num_snapshots * meta.num_tx * pairs * meta.num_subcarriers);
    for t in 0..meta.num_snapshots {
        for i in 0..meta.num_tx {
            for k in 0..pairs {
                let a = csi.slice(t, i, k);
                let b = csi.slice(t, i, k + 1);
                data.extend(a.iter().zip(b).map(|(x, y)| wrap_phase(x.arg() - y.arg())));
            }
        }
    }
    PhaseDiffSet {
        num_snapshots: meta.num_snapshots,
        num_tx: meta.num_tx,
        num_pairs: pairs,
        num_subcarriers: meta.num_subcarriers,
        snapshot_rate_hz: meta.snapshot_rate_hz,
        data,
    }
}
