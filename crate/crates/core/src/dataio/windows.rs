//! Dataset reduction and sliding analysis windows.

use serde::{Deserialize, Serialize};

use crate::csi::{CsiSampleSet, RadioMeta, SampleTensor};
use crate::error::{Error, Result};

/// Part of the subcarrier axis to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubcarrierHalf {
    /// Higher-index half, `⌈M/2⌉` subcarriers.
    Upper,
    /// Lower-index half, `⌊M/2⌋` subcarriers.
    Lower,
    Full,
}

/// Keep one TX antenna and every `stride`-th subcarrier of one half of the band.
///
/// Striding starts at the first subcarrier of the chosen half; the spacing in
/// the returned metadata is multiplied by `stride`.
pub fn reduce_dataset(
    set: &CsiSampleSet,
    keep_tx: usize,
    stride: usize,
    half: SubcarrierHalf,
) -> Result<CsiSampleSet> {
    let meta = set.meta();
    if keep_tx >= meta.num_tx {
        return Err(Error::validation(format!(
            "keep_tx {keep_tx} out of range for {} TX antennas",
            meta.num_tx
        )));
    }
    if stride == 0 {
        return Err(Error::validation("subcarrier stride must be at least 1"));
    }
    let m = meta.num_subcarriers;
    let band = match half {
        SubcarrierHalf::Upper => m / 2..m,
        SubcarrierHalf::Lower => 0..m / 2,
        SubcarrierHalf::Full => 0..m,
    };
    let keep: Vec<usize> = band.step_by(stride).collect();
    let out_meta = RadioMeta {
        num_tx: 1,
        num_subcarriers: keep.len(),
        subcarrier_spacing_hz: meta.subcarrier_spacing_hz * stride as f64,
        ..*meta
    };
    out_meta.validate()?;
    CsiSampleSet::from_fn(out_meta, |t, _, j, k| set.get(t, keep_tx, j, keep[k]))
}

/// Window length and hop in snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowPlan {
    pub len: usize,
    pub step: usize,
    pub count: usize,
}

impl WindowPlan {
    /// `⌊window_s·f_s⌋` snapshots every `⌊step_s·f_s⌋`; a trailing partial window is dropped.
    pub fn new(num_snapshots: usize, fs: f64, window_s: f64, step_s: f64) -> Result<Self> {
        // tolerate products like 30·9.9 = 296.99999999999994
        let len = (window_s * fs + 1e-9).floor();
        let step = (step_s * fs + 1e-9).floor();
        if !(len.is_finite() && len >= 2.0) {
            return Err(Error::validation(format!(
                "window of {window_s} s at {fs} Hz holds fewer than 2 snapshots"
            )));
        }
        if !(step.is_finite() && step >= 1.0) {
            return Err(Error::validation(format!(
                "step of {step_s} s at {fs} Hz is shorter than one snapshot"
            )));
        }
        let (len, step) = (len as usize, step as usize);
        let count = if num_snapshots < len {
            0
        } else {
            (num_snapshots - len) / step + 1
        };
        Ok(Self { len, step, count })
    }

    pub fn start(&self, k: usize) -> usize {
        k * self.step
    }
}

/// Snapshots `[start, start + len)` as a new sample set.
pub fn extract_window(set: &CsiSampleSet, start: usize, len: usize) -> Result<CsiSampleSet> {
    let meta = set.meta();
    if start + len > meta.num_snapshots || len == 0 {
        return Err(Error::validation(format!(
            "window [{start}, {}) outside {} snapshots",
            start + len,
            meta.num_snapshots
        )));
    }
    let per_snapshot = meta.num_tx * meta.num_rx * meta.num_subcarriers;
    let data = set.data()[start * per_snapshot..(start + len) * per_snapshot].to_vec();
    Ok(CsiSampleSet::from_parts_unchecked(
        RadioMeta {
            num_snapshots: len,
            ..*meta
        },
        data,
    ))
}

/// All full windows in order.
pub fn sliding_windows(set: &CsiSampleSet, window_s: f64, step_s: f64) -> Result<Vec<CsiSampleSet>> {
    let meta = set.meta();
    let plan = WindowPlan::new(meta.num_snapshots, meta.snapshot_rate_hz, window_s, step_s)?;
    (0..plan.count)
        .map(|k| extract_window(set, plan.start(k), plan.len))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::test_support::meta;
    use num_complex::Complex64;

    fn indexed(t: usize, nt: usize, m: usize) -> CsiSampleSet {
        CsiSampleSet::from_fn(meta(t, nt, 2, m), |t, i, j, m| {
            Complex64::new(m as f64, (100 * t + 10 * i + j) as f64)
        })
        .unwrap()
    }

    #[test]
    fn upper_half_stride_two_gives_29() {
        let r = reduce_dataset(&indexed(2, 2, 114), 1, 2, SubcarrierHalf::Upper).unwrap();
        assert_eq!(r.meta().num_subcarriers, 29);
        assert_eq!(r.meta().num_tx, 1);
        assert_eq!(r.meta().subcarrier_spacing_hz, 2.0 * 703_125.0);
        let picked: Vec<usize> = (0..29).map(|k| r.get(0, 0, 0, k).re as usize).collect();
        assert_eq!(picked, (57..=113).step_by(2).collect::<Vec<_>>());
        assert_eq!(r.get(1, 0, 1, 0).im, 111.0);
    }

    #[test]
    fn lower_half_and_full() {
        let r = reduce_dataset(&indexed(1, 1, 30), 0, 2, SubcarrierHalf::Lower).unwrap();
        assert_eq!(r.meta().num_subcarriers, 8);
        let once = reduce_dataset(&indexed(3, 2, 30), 0, 1, SubcarrierHalf::Full).unwrap();
        assert_eq!(once.meta().num_subcarriers, 30);
        let twice = reduce_dataset(&once, 0, 1, SubcarrierHalf::Full).unwrap();
        assert_eq!(once, twice);
        assert!(reduce_dataset(&once, 1, 1, SubcarrierHalf::Full).is_err());
        assert!(reduce_dataset(&once, 0, 0, SubcarrierHalf::Full).is_err());
    }

    #[test]
    fn window_arithmetic() {
        assert_eq!(WindowPlan::new(297, 9.9, 30.0, 1.0).unwrap(), WindowPlan { len: 297, step: 9, count: 1 });
        assert_eq!(WindowPlan::new(306, 9.9, 30.0, 1.0).unwrap().count, 2);
        assert_eq!(WindowPlan::new(296, 9.9, 30.0, 1.0).unwrap().count, 0);
        assert!(WindowPlan::new(100, 9.9, 0.1, 1.0).is_err());
    }

    #[test]
    fn windows_start_on_the_step_grid() {
        let set = indexed(320, 1, 4);
        let w = sliding_windows(&set, 30.0, 1.0).unwrap();
        assert_eq!(w.len(), 3);
        for (k, win) in w.iter().enumerate() {
            assert_eq!(win.meta().num_snapshots, 297);
            assert_eq!(win.get(0, 0, 0, 0).im, (100 * 9 * k) as f64);
            assert_eq!(win.get(296, 0, 1, 3), set.get(9 * k + 296, 0, 1, 3));
        }
    }
}
