//! Hampel-based trend extraction.
//!
//! The Hampel filter replaces a sample by its window median when it deviates
//! from that median by more than `threshold · 1.4826 · MAD` (median absolute
//! deviation). With a small threshold almost every sample is replaced, so the
//! output is the running median: the slowly varying DC component.

use crate::error::{Error, Result};

/// Gaussian consistency factor for the median absolute deviation.
pub const MAD_SCALE: f64 = 1.4826;

/// Trend (`dc`) and residual (`ac = x − dc`).
#[derive(Debug, Clone, PartialEq)]
pub struct Detrended {
    pub dc: Vec<f64>,
    pub ac: Vec<f64>,
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Centered window `[t − w/2, t − w/2 + w)` clipped to the series.
pub(crate) fn window_bounds(t: usize, width: usize, len: usize) -> (usize, usize) {
    let start = t.saturating_sub(width / 2);
    let end = (t + width - width / 2).min(len);
    (start, end)
}

/// Split `x` into Hampel trend and residual.
///
/// The window holds `⌊window_s·f_s⌋` samples, centered and shrunk at the edges.
pub fn hampel_detrend(x: &[f64], window_s: f64, threshold: f64, fs: f64) -> Result<Detrended> {
    let width_f = window_s * fs;
    if !(width_f.is_finite() && width_f >= 3.0) {
        return Err(Error::validation(format!(
            "Hampel window must hold at least 3 samples, got {width_f}"
        )));
    }
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::validation("Hampel threshold must be non-negative"));
    }
    let width = (width_f + 1e-9).floor() as usize;
    let mut dc = Vec::with_capacity(x.len());
    let mut scratch = Vec::with_capacity(width);
    for (t, &v) in x.iter().enumerate() {
        let (start, end) = window_bounds(t, width, x.len());
        scratch.clear();
        scratch.extend_from_slice(&x[start..end]);
        let med = median_in_place(&mut scratch);
        for s in scratch.iter_mut() {
            *s = (*s - med).abs();
        }
        let sigma = MAD_SCALE * median_in_place(&mut scratch);
        dc.push(if (v - med).abs() > threshold * sigma {
            med
        } else {
            v
        });
    }
    let ac = x.iter().zip(&dc).map(|(v, d)| v - d).collect();
    Ok(Detrended { dc, ac })
}
