//! Time-axis and delay-axis conditioning.
//!
//! All filtering is transform-domain: bins are zeroed and the signal is
//! transformed back, so every filter here is an orthogonal projection.

mod hampel;
mod wavelet;

pub use hampel::{hampel_detrend, Detrended, MAD_SCALE};
pub use wavelet::{breathing_level, dwt_db4_approx, max_level, WaveletDecomp, DB4_DEC_LO};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::csi::{CsiSampleSet, SampleTensor, SliceTransform};
use crate::detect::{signed_freq, BAND_EPS_HZ};
use crate::error::{Error, Result};

/// Bins whose signed delay satisfies `|delay| ≤ τ_max`.
pub fn delay_filter_bins(meta: &crate::csi::RadioMeta, tau_max_s: f64) -> Vec<usize> {
    // relative slack so a bin exactly at τ_max survives rounding
    let bound = tau_max_s * (1.0 + 1e-12);
    (0..meta.num_subcarriers)
        .filter(|&k| meta.bin_delay_s(k).abs() <= bound)
        .collect()
}

/// Zero every CIR bin with `|delay| > τ_max` and return to the frequency domain.
pub fn delay_filter(csi: &CsiSampleSet, tau_max_s: f64) -> Result<CsiSampleSet> {
    if !(tau_max_s.is_finite() && tau_max_s > 0.0) {
        return Err(Error::validation(format!(
            "delay bound must be positive, got {tau_max_s}"
        )));
    }
    let meta = *csi.meta();
    let m = meta.num_subcarriers;
    let mut keep = vec![false; m];
    for k in delay_filter_bins(&meta, tau_max_s) {
        keep[k] = true;
    }
    let mut data = csi.data().to_vec();
    if keep.iter().all(|&k| k) {
        return Ok(CsiSampleSet::from_parts_unchecked(meta, data));
    }
    let transform = SliceTransform::new(m);
    transform.to_delay(&mut data);
    for slice in data.chunks_exact_mut(m) {
        for (z, &k) in slice.iter_mut().zip(&keep) {
            if !k {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    transform.to_frequency(&mut data);
    Ok(CsiSampleSet::from_parts_unchecked(meta, data))
}

/// Keep only DFT bins with `f_low ≤ |f| ≤ f_high` along the series.
pub fn band_pass(x: &[Complex64], f_low: f64, f_high: f64, fs: f64) -> Result<Vec<Complex64>> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::validation("sampling rate must be positive"));
    }
    if !(f_low >= 0.0 && f_low < f_high && f_high <= fs / 2.0 + BAND_EPS_HZ) {
        return Err(Error::validation(format!(
            "band [{f_low}, {f_high}] Hz invalid for f_s = {fs} Hz"
        )));
    }
    let n = x.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut planner = FftPlanner::new();
    let mut buf = x.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let f = signed_freq(k, n, fs).abs();
        if f < f_low - BAND_EPS_HZ || f > f_high + BAND_EPS_HZ {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.into_iter().map(|z| z * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::test_support::{max_rel_err, meta};
    use crate::csi::{cir_to_csi, CirSampleSet};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tone(f: f64, n: usize, fs: f64) -> Vec<Complex64> {
        (0..n)
            .map(|t| Complex64::from_polar(1.0, 2.0 * PI * f * t as f64 / fs))
            .collect()
    }

    fn max_abs(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn default_geometry_keeps_three_bins() {
        let md = meta(1, 1, 2, 29);
        // brute-force bin map: k·res for k ≤ 14, (k−29)·res above
        let res = 1.0 / (29.0 * 703_125.0);
        let want: Vec<usize> = (0..29)
            .filter(|&k| {
                let d = if k <= 14 { k as f64 } else { k as f64 - 29.0 } * res;
                d.abs() <= 50e-9
            })
            .collect();
        assert_eq!(want, vec![0, 1, 28]);
        assert_eq!(delay_filter_bins(&md, 50e-9), want);
    }

    #[test]
    fn wide_bound_is_identity() {
        let md = meta(4, 2, 2, 29);
        let csi = CsiSampleSet::from_fn(md, |t, i, j, m| {
            Complex64::new((t + m) as f64, (i * j) as f64 - m as f64 * 0.3)
        })
        .unwrap();
        let out = delay_filter(&csi, 1.0).unwrap();
        assert!(max_rel_err(out.data(), csi.data()) < 1e-9);
    }

    #[test]
    fn two_tap_channel_keeps_near_tap() {
        let md = meta(2, 1, 2, 29);
        let res = md.delay_resolution_s();
        // tap at bin 3 ≈ 147 ns
        assert!((3.0 * res - 147e-9).abs() < 1e-9);
        let mut taps = vec![Complex64::new(0.0, 0.0); md.len()];
        for t in 0..2 {
            for j in 0..2 {
                taps[md.index(t, 0, j, 0)] = Complex64::new(1.5, -0.5);
                taps[md.index(t, 0, j, 3)] = Complex64::new(0.7, 0.2);
            }
        }
        let csi = cir_to_csi(&CirSampleSet::new(md, taps).unwrap());
        let out = delay_filter(&csi, 50e-9).unwrap();
        assert!(out
            .data()
            .iter()
            .all(|z| (z - Complex64::new(1.5, -0.5)).norm() < 1e-9));
    }

    #[test]
    fn rejects_nonpositive_bound() {
        let csi = CsiSampleSet::zeros(meta(1, 1, 2, 8)).unwrap();
        assert!(delay_filter(&csi, 0.0).is_err());
        assert!(delay_filter(&csi, f64::NAN).is_err());
    }

    #[test]
    fn band_pass_tones() {
        let (fs, n) = (9.9, 297);
        let bin = fs / n as f64;
        let inband = tone(9.0 * bin, n, fs); // 0.3 Hz
        let outband = tone(30.0 * bin, n, fs); // 1.0 Hz
        assert!(max_abs(&band_pass(&inband, 0.2, 0.5, fs).unwrap(), &inband) < 1e-9);
        assert!(band_pass(&outband, 0.2, 0.5, fs)
            .unwrap()
            .iter()
            .all(|z| z.norm() < 1e-9));
        let mixed: Vec<Complex64> = inband.iter().zip(&outband).map(|(a, b)| a + b * 2.0).collect();
        assert!(max_abs(&band_pass(&mixed, 0.2, 0.5, fs).unwrap(), &inband) < 1e-9);
        // negative-frequency side is kept too
        let neg = tone(-9.0 * bin, n, fs);
        assert!(max_abs(&band_pass(&neg, 0.2, 0.5, fs).unwrap(), &neg) < 1e-9);
    }

    #[test]
    fn band_pass_rejects_bad_band() {
        let x = tone(0.3, 32, 9.9);
        assert!(band_pass(&x, 0.5, 0.2, 9.9).is_err());
        assert!(band_pass(&x, 0.2, 6.0, 9.9).is_err());
        assert!(band_pass(&x, -0.1, 0.5, 9.9).is_err());
    }

    fn arb_csi() -> impl Strategy<Value = CsiSampleSet> {
        (1usize..4, 1usize..3, 2usize..4, 4usize..40).prop_flat_map(|(t, nt, nr, m)| {
            let md = meta(t, nt, nr, m);
            prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), md.len()).prop_map(move |v| {
                CsiSampleSet::new(md, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn delay_filter_is_idempotent(x in arb_csi(), tau in 1e-9f64..400e-9) {
            let once = delay_filter(&x, tau).unwrap();
            let twice = delay_filter(&once, tau).unwrap();
            let scale = once.data().iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(max_abs(once.data(), twice.data()) <= 1e-10 * scale);
        }

        #[test]
        fn delay_filter_commutes_with_snapshot_scaling(x in arb_csi(), g in 0.1f64..10.0) {
            let md = *x.meta();
            let scaled = CsiSampleSet::from_fn(md, |t, i, j, m| x.get(t, i, j, m) * (g + t as f64)).unwrap();
            let a = delay_filter(&scaled, 50e-9).unwrap();
            let b = delay_filter(&x, 50e-9).unwrap();
            let b = CsiSampleSet::from_fn(md, |t, i, j, m| b.get(t, i, j, m) * (g + t as f64)).unwrap();
            let scale = a.data().iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(max_abs(a.data(), b.data()) <= 1e-10 * scale);
        }

        #[test]
        fn band_pass_keeps_in_band_power(v in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 16..200)) {
            let fs = 9.9;
            let x: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            let n = x.len();
            let y = band_pass(&x, 0.2, 0.5, fs).unwrap();
            // oracle: direct DFT power over in-band bins, scaled by 1/N (Parseval)
            let mut want = 0.0;
            for k in 0..n {
                let f = signed_freq(k, n, fs).abs();
                if (0.2 - BAND_EPS_HZ..=0.5 + BAND_EPS_HZ).contains(&f) {
                    let s: Complex64 = x.iter().enumerate()
                        .map(|(t, z)| z * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                        .sum();
                    want += s.norm_sqr();
                }
            }
            want /= n as f64;
            let got: f64 = y.iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
            // projection: a second pass changes nothing
            let y2 = band_pass(&y, 0.2, 0.5, fs).unwrap();
            prop_assert!(max_abs(&y, &y2) < 1e-10 * (1.0 + got.sqrt()));
        }
    }
}
