//! Daubechies-4 (8-tap) discrete wavelet transform.
//!
//! Boundaries use half-sample symmetric extension
//! (`x[−1] = x[0]`, `x[N] = x[N−1]`, ...). A level of decomposition maps `N`
//! samples to `⌊(N+7)/2⌋` approximation and detail coefficients each, and
//! reconstruction keeps only the fully determined part of the upsampled
//! convolution, so decomposition followed by reconstruction is exact.

use crate::error::{Error, Result};

/// db4 decomposition low-pass filter.
pub const DB4_DEC_LO: [f64; 8] = [
    -0.010_597_401_785_069_032,
    0.032_883_011_666_885_2,
    0.030_841_381_835_560_764,
    -0.187_034_811_719_093_09,
    -0.027_983_769_416_859_854,
    0.630_880_767_929_858_9,
    0.714_846_570_552_915_7,
    0.230_377_813_308_896_5,
];

const TAPS: usize = DB4_DEC_LO.len();

struct FilterBank {
    dec_lo: [f64; TAPS],
    dec_hi: [f64; TAPS],
    rec_lo: [f64; TAPS],
    rec_hi: [f64; TAPS],
}

impl FilterBank {
    fn db4() -> Self {
        let dec_lo = DB4_DEC_LO;
        let mut dec_hi = [0.0; TAPS];
        for (k, h) in dec_hi.iter_mut().enumerate() {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            *h = sign * dec_lo[TAPS - 1 - k];
        }
        let mut rec_lo = dec_lo;
        rec_lo.reverse();
        let mut rec_hi = dec_hi;
        rec_hi.reverse();
        Self {
            dec_lo,
            dec_hi,
            rec_lo,
            rec_hi,
        }
    }
}

/// Index into the half-sample symmetric extension of a length-`n` signal.
fn reflect(p: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let q = p.rem_euclid(period) as usize;
    if q < n {
        q
    } else {
        2 * n - 1 - q
    }
}

fn analysis_step(x: &[f64], bank: &FilterBank) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let out_len = (n + TAPS - 1) / 2;
    let mut approx = Vec::with_capacity(out_len);
    let mut detail = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let i = (2 * o + 1) as isize;
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..TAPS {
            let v = x[reflect(i - j as isize, n)];
            a += bank.dec_lo[j] * v;
            d += bank.dec_hi[j] * v;
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], bank: &FilterBank) -> Vec<f64> {
    let n = approx.len();
    debug_assert_eq!(n, detail.len());
    let half = TAPS / 2;
    let out_len = 2 * n + 2 - TAPS;
    let mut out = vec![0.0; out_len];
    for i in half - 1..n {
        let o = 2 * (i + 1 - half);
        let (mut even, mut odd) = (0.0, 0.0);
        for j in 0..half {
            even += bank.rec_lo[2 * j] * approx[i - j] + bank.rec_hi[2 * j] * detail[i - j];
            odd += bank.rec_lo[2 * j + 1] * approx[i - j] + bank.rec_hi[2 * j + 1] * detail[i - j];
        }
        out[o] = even;
        out[o + 1] = odd;
    }
    out
}

/// Deepest level whose coefficients still span a full filter: `⌊log2(N/7)⌋`.
pub fn max_level(len: usize) -> u32 {
    let mut level = 0;
    while (TAPS - 1) << (level + 1) <= len {
        level += 1;
    }
    level
}

/// Multilevel db4 decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletDecomp {
    pub level: u32,
    /// Approximation coefficients at `level`.
    pub approx: Vec<f64>,
    /// Detail coefficients; `details[l − 1]` belongs to level `l`.
    pub details: Vec<Vec<f64>>,
    /// Length of the decomposed series.
    pub signal_len: usize,
}

impl WaveletDecomp {
    pub fn decompose(x: &[f64], level: u32) -> Result<Self> {
        let needed = (TAPS - 1) << level;
        if level == 0 || x.len() < needed {
            return Err(Error::SeriesTooShort {
                level,
                needed,
                len: x.len(),
            });
        }
        let bank = FilterBank::db4();
        let mut approx = x.to_vec();
        let mut details = Vec::with_capacity(level as usize);
        for _ in 0..level {
            let (a, d) = analysis_step(&approx, &bank);
            approx = a;
            details.push(d);
        }
        Ok(Self {
            level,
            approx,
            details,
            signal_len: x.len(),
        })
    }

    /// Inverse transform back to `signal_len` samples.
    pub fn reconstruct(&self) -> Vec<f64> {
        let bank = FilterBank::db4();
        let mut approx = self.approx.clone();
        for detail in self.details.iter().rev() {
            if approx.len() == detail.len() + 1 {
                approx.pop();
            }
            approx = synthesis_step(&approx, detail, &bank);
        }
        approx.truncate(self.signal_len);
        approx
    }

    /// Copy with every detail band zeroed.
    pub fn approx_only(&self) -> Self {
        Self {
            details: self.details.iter().map(|d| vec![0.0; d.len()]).collect(),
            ..self.clone()
        }
    }
}

/// Level `L` with `f_s/2^(L+2) < 0.5 Hz ≤ f_s/2^(L+1)`, i.e. `⌊log2 f_s⌋`.
///
/// Zero or negative means the sampling rate is already so low that no band
/// above 0.5 Hz needs removing.
pub fn breathing_level(fs: f64) -> i32 {
    let mut level = fs.log2().floor() as i32;
    // guard against log2 rounding right at powers of two
    while fs / 2f64.powi(level + 1) < 0.5 {
        level -= 1;
    }
    while fs / 2f64.powi(level + 2) >= 0.5 {
        level += 1;
    }
    level
}

/// Level-`L` db4 approximation reconstructed at full length (details zeroed),
/// with `L` chosen by [`breathing_level`].
pub fn dwt_db4_approx(x: &[f64], fs: f64) -> Result<Vec<f64>> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::validation("sampling rate must be positive"));
    }
    let level = breathing_level(fs);
    if level <= 0 {
        return Ok(x.to_vec());
    }
    Ok(WaveletDecomp::decompose(x, level as u32)?
        .approx_only()
        .reconstruct())
}
