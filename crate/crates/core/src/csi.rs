//! CSI and CIR sample sets.
//!
//! A sample set is a complex tensor indexed `[t][i][j][m]` (snapshot, TX
//! antenna, RX antenna, subcarrier), stored row-major. The delay-domain
//! counterpart uses the same layout with a delay-bin index `k` in place of `m`.
//!
//! DFT convention: the delay-to-frequency transform carries no scale factor,
//! the frequency-to-delay transform carries `1/M`. A flat CSI of value `A`
//! is therefore a unit impulse of height `A` at delay bin 0.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions and radio parameters of a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioMeta {
    pub num_snapshots: usize,
    pub num_tx: usize,
    pub num_rx: usize,
    pub num_subcarriers: usize,
    /// Snapshot rate `f_s` in Hz.
    pub snapshot_rate_hz: f64,
    /// Subcarrier spacing `Δf` in Hz.
    pub subcarrier_spacing_hz: f64,
    /// Carrier frequency `f_c` in Hz.
    pub carrier_freq_hz: f64,
}

impl RadioMeta {
    pub fn validate(&self) -> Result<()> {
        if self.num_snapshots < 1 {
            return Err(Error::validation("num_snapshots must be at least 1"));
        }
        if self.num_tx < 1 {
            return Err(Error::validation("num_tx must be at least 1"));
        }
        if self.num_rx < 2 {
            return Err(Error::validation(format!(
                "num_rx must be at least 2, got {}",
                self.num_rx
            )));
        }
        if self.num_subcarriers < 2 {
            return Err(Error::validation(format!(
                "num_subcarriers must be at least 2, got {}",
                self.num_subcarriers
            )));
        }
        for (name, v) in [
            ("snapshot_rate_hz", self.snapshot_rate_hz),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("carrier_freq_hz", self.carrier_freq_hz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Total number of complex entries `T·N_T·N_R·M`.
    pub fn len(&self) -> usize {
        self.num_snapshots * self.num_tx * self.num_rx * self.num_subcarriers
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat offset of the `(t, i, j)` slice.
    #[inline]
    pub fn slice_offset(&self, t: usize, i: usize, j: usize) -> usize {
        ((t * self.num_tx + i) * self.num_rx + j) * self.num_subcarriers
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, j: usize, m: usize) -> usize {
        self.slice_offset(t, i, j) + m
    }

    /// Delay resolution `1/(M·Δf)` in seconds.
    pub fn delay_resolution_s(&self) -> f64 {
        1.0 / (self.num_subcarriers as f64 * self.subcarrier_spacing_hz)
    }

    /// Signed circular delay of bin `k`: `k/(M·Δf)` for `k ≤ ⌊M/2⌋`,
    /// `(k−M)/(M·Δf)` above.
    pub fn bin_delay_s(&self, k: usize) -> f64 {
        let m = self.num_subcarriers;
        let signed = if k <= m / 2 {
            k as f64
        } else {
            k as f64 - m as f64
        };
        signed * self.delay_resolution_s()
    }

    /// Duration covered by the snapshots, `T/f_s`.
    pub fn duration_s(&self) -> f64 {
        self.num_snapshots as f64 / self.snapshot_rate_hz
    }
}

/// Shared read access for the two complex sample-set types.
pub trait SampleTensor {
    fn meta(&self) -> &RadioMeta;
    fn data(&self) -> &[Complex64];

    /// The `M` entries of the `(t, i, j)` slice.
    fn slice(&self, t: usize, i: usize, j: usize) -> &[Complex64] {
        let meta = self.meta();
        let off = meta.slice_offset(t, i, j);
        &self.data()[off..off + meta.num_subcarriers]
    }

    /// Entry `(i, j, m)` over all snapshots.
    fn series(&self, i: usize, j: usize, m: usize) -> Vec<Complex64> {
        let meta = *self.meta();
        (0..meta.num_snapshots)
            .map(|t| self.data()[meta.index(t, i, j, m)])
            .collect()
    }

    fn get(&self, t: usize, i: usize, j: usize, m: usize) -> Complex64 {
        self.data()[self.meta().index(t, i, j, m)]
    }
}

fn check_tensor(meta: &RadioMeta, data: &[Complex64]) -> Result<()> {
    meta.validate()?;
    if data.len() != meta.len() {
        return Err(Error::validation(format!(
            "data length {} does not match T·N_T·N_R·M = {}",
            data.len(),
            meta.len()
        )));
    }
    if let Some(index) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Frequency-domain channel estimates `H[t][i][j][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiSampleSet {
    meta: RadioMeta,
    data: Vec<Complex64>,
}

impl CsiSampleSet {
    pub fn new(meta: RadioMeta, data: Vec<Complex64>) -> Result<Self> {
        check_tensor(&meta, &data)?;
        Ok(Self { meta, data })
    }

    pub fn zeros(meta: RadioMeta) -> Result<Self> {
        meta.validate()?;
        Ok(Self {
            data: vec![Complex64::new(0.0, 0.0); meta.len()],
            meta,
        })
    }

    /// Build from a function of `(t, i, j, m)`.
    pub fn from_fn(meta: RadioMeta, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Result<Self> {
        meta.validate()?;
        let mut data = Vec::with_capacity(meta.len());
        for t in 0..meta.num_snapshots {
            for i in 0..meta.num_tx {
                for j in 0..meta.num_rx {
                    for m in 0..meta.num_subcarriers {
                        data.push(f(t, i, j, m));
                    }
                }
            }
        }
        Self::new(meta, data)
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub(crate) fn from_parts_unchecked(meta: RadioMeta, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(meta.len(), data.len());
        Self { meta, data }
    }
}

impl SampleTensor for CsiSampleSet {
    fn meta(&self) -> &RadioMeta {
        &self.meta
    }
    fn data(&self) -> &[Complex64] {
        &self.data
    }
}

/// Delay-domain channel impulse responses `h[t][i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirSampleSet {
    meta: RadioMeta,
    data: Vec<Complex64>,
}

impl CirSampleSet {
    pub fn new(meta: RadioMeta, data: Vec<Complex64>) -> Result<Self> {
        check_tensor(&meta, &data)?;
        Ok(Self { meta, data })
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Signed delay of bin `k` in seconds.
    pub fn bin_delay_s(&self, k: usize) -> f64 {
        self.meta.bin_delay_s(k)
    }
}

impl SampleTensor for CirSampleSet {
    fn meta(&self) -> &RadioMeta {
        &self.meta
    }
    fn data(&self) -> &[Complex64] {
        &self.data
    }
}

/// Per-slice DFT along the subcarrier (or delay) axis.
pub(crate) struct SliceTransform {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SliceTransform {
    pub(crate) fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    /// Frequency to delay, in place, scaled by `1/M`.
    pub(crate) fn to_delay(&self, buf: &mut [Complex64]) {
        for chunk in buf.chunks_exact_mut(self.len) {
            self.inverse.process(chunk);
        }
        let scale = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Delay to frequency, in place, unscaled.
    pub(crate) fn to_frequency(&self, buf: &mut [Complex64]) {
        for chunk in buf.chunks_exact_mut(self.len) {
            self.forward.process(chunk);
        }
    }
}

/// Inverse DFT along `m` for every `(t, i, j)` slice.
pub fn csi_to_cir(csi: &CsiSampleSet) -> CirSampleSet {
    let mut data = csi.data.clone();
    SliceTransform::new(csi.meta.num_subcarriers).to_delay(&mut data);
    CirSampleSet {
        meta: csi.meta,
        data,
    }
}

/// Forward DFT along `k` for every `(t, i, j)` slice; exact inverse of [`csi_to_cir`].
pub fn cir_to_csi(cir: &CirSampleSet) -> CsiSampleSet {
    let mut data = cir.data.clone();
    SliceTransform::new(cir.meta.num_subcarriers).to_frequency(&mut data);
    CsiSampleSet {
        meta: cir.meta,
        data,
    }
}
