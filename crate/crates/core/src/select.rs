//! Stability gating and candidate-series selection.
//!
//! A window is only analysed when its phase differences are stable enough
//! (`Q` below a threshold). Out of the many per-subcarrier (or per-delay)
//! series, one candidate is then picked, either by mean absolute deviation
//! or by how much of its power falls into the breathing band.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calib::PhaseDiffSet;
use crate::csi::{CirSampleSet, CsiSampleSet, SampleTensor};
use crate::detect::{signed_freq, Domain, Periodogram, Provenance, BAND_EPS_HZ};
use crate::error::{Error, Result};
use crate::series::Series;

/// Default stability threshold; windows with `Q ≥ 0.18` are skipped.
pub const Q_THRESHOLD: f64 = 0.18;

/// Added to the out-of-band power so band-limited series do not divide by zero.
pub const BOI_EPS: f64 = 1e-12;

/// Minimum window length for band-of-interest scoring.
pub const BOI_MIN_SNAPSHOTS: usize = 16;

/// Breathing band of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoiConfig {
    pub f_low_hz: f64,
    pub f_high_hz: f64,
}

impl Default for BoiConfig {
    fn default() -> Self {
        Self {
            f_low_hz: 0.2,
            f_high_hz: 0.5,
        }
    }
}

impl BoiConfig {
    pub fn validate(&self, fs: f64) -> Result<()> {
        if !(self.f_low_hz > 0.0 && self.f_low_hz < self.f_high_hz && self.f_high_hz < fs / 2.0) {
            return Err(Error::validation(format!(
                "band of interest [{}, {}] Hz must satisfy 0 < low < high < f_s/2 = {}",
                self.f_low_hz,
                self.f_high_hz,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// The series chosen for rate detection.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub series: Series,
    pub provenance: Provenance,
    /// Selection score: MAD for [`mad_select`], `S` for [`boi_select`].
    pub score: f64,
}

/// Anything that can be viewed as a list of candidate time series.
pub trait CandidateSource {
    fn num_candidates(&self) -> usize;
    fn num_snapshots(&self) -> usize;
    fn snapshot_rate_hz(&self) -> f64;
    /// Series `n` in lexicographic `(tx, rx-or-pair, bin)` order.
    fn candidate(&self, n: usize) -> (Series, Provenance);
}

fn tensor_candidate<S: SampleTensor>(set: &S, n: usize, domain: Domain) -> (Series, Provenance) {
    let meta = set.meta();
    let bin = n % meta.num_subcarriers;
    let pair = n / meta.num_subcarriers;
    let (tx, rx) = (pair / meta.num_rx, pair % meta.num_rx);
    (
        Series::Complex(set.series(tx, rx, bin)),
        Provenance { domain, tx, rx, bin },
    )
}

impl CandidateSource for CsiSampleSet {
    fn num_candidates(&self) -> usize {
        let m = self.meta();
        m.num_tx * m.num_rx * m.num_subcarriers
    }
    fn num_snapshots(&self) -> usize {
        self.meta().num_snapshots
    }
    fn snapshot_rate_hz(&self) -> f64 {
        self.meta().snapshot_rate_hz
    }
    fn candidate(&self, n: usize) -> (Series, Provenance) {
        tensor_candidate(self, n, Domain::Frequency)
    }
}

impl CandidateSource for CirSampleSet {
    fn num_candidates(&self) -> usize {
        let m = self.meta();
        m.num_tx * m.num_rx * m.num_subcarriers
    }
    fn num_snapshots(&self) -> usize {
        self.meta().num_snapshots
    }
    fn snapshot_rate_hz(&self) -> f64 {
        self.meta().snapshot_rate_hz
    }
    fn candidate(&self, n: usize) -> (Series, Provenance) {
        tensor_candidate(self, n, Domain::Delay)
    }
}

impl CandidateSource for PhaseDiffSet {
    fn num_candidates(&self) -> usize {
        self.num_series()
    }
    fn num_snapshots(&self) -> usize {
        self.dims()[0]
    }
    fn snapshot_rate_hz(&self) -> f64 {
        PhaseDiffSet::snapshot_rate_hz(self)
    }
    fn candidate(&self, n: usize) -> (Series, Provenance) {
        let (tx, pair, bin) = self.series_index(n);
        (
            Series::Real(self.series(tx, pair, bin)),
            Provenance {
                domain: Domain::PhaseDifference,
                tx,
                rx: pair,
                bin,
            },
        )
    }
}

/// Mean absolute deviation `mean |x − mean(x)|`.
pub fn mad(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    // shifting by the first sample keeps constant series exactly at zero
    let x0 = x[0];
    let mean = x.iter().map(|v| v - x0).sum::<f64>() / n;
    x.iter().map(|v| (v - x0 - mean).abs()).sum::<f64>() / n
}

/// Stability score `Q`: the mean absolute deviation over time, averaged over
/// every `(tx, pair, subcarrier)` series.
pub fn stability_score(pd: &PhaseDiffSet) -> f64 {
    let n = pd.num_series();
    let total: f64 = (0..n)
        .map(|s| {
            let (i, k, m) = pd.series_index(s);
            mad(&pd.series(i, k, m))
        })
        .sum();
    total / n as f64
}

/// `true` when the window is stable enough to analyse (`Q < threshold`).
pub fn passes_gate(q: f64, threshold: f64) -> bool {
    q < threshold
}

/// Pre-select the three series with the largest MAD and return the median one.
///
/// Ties are broken towards the lowest `(tx, pair, subcarrier)` index.
pub fn mad_select(pd: &PhaseDiffSet) -> Result<Candidate> {
    let n = pd.num_series();
    if n < 3 {
        return Err(Error::TooFewSeries(n));
    }
    // top three as (mad, index), ordered by mad descending then index ascending;
    // scanning indices upwards with a strict comparison keeps that order
    let mut top: [(f64, usize); 3] = [(f64::NEG_INFINITY, usize::MAX); 3];
    for s in 0..n {
        let (i, k, m) = pd.series_index(s);
        let v = mad(&pd.series(i, k, m));
        if v > top[2].0 {
            top[2] = (v, s);
            if top[2].0 > top[1].0 {
                top.swap(1, 2);
                if top[1].0 > top[0].0 {
                    top.swap(0, 1);
                }
            }
        }
    }
    let median = top[1].0;
    let pick = top
        .iter()
        .filter(|(v, _)| *v == median)
        .map(|&(_, s)| s)
        .min()
        .expect("median is one of the three");
    let (series, provenance) = pd.candidate(pick);
    Ok(Candidate {
        series,
        provenance,
        score: median,
    })
}

/// Band-of-interest score of one series: in-band over out-of-band periodogram
/// power (DC excluded, mean removed, no zero-padding).
pub fn boi_score(x: &[Complex64], fs: f64, cfg: &BoiConfig) -> f64 {
    boi_score_with(&Periodogram::new(x.len()), x, fs, cfg)
}

fn boi_score_with(pg: &Periodogram, x: &[Complex64], fs: f64, cfg: &BoiConfig) -> f64 {
    let n = x.len();
    let power = pg.power(x);
    let (mut inside, mut outside) = (0.0, 0.0);
    for (k, p) in power.iter().enumerate().skip(1) {
        let f = signed_freq(k, n, fs).abs();
        if f > cfg.f_high_hz + BAND_EPS_HZ {
            outside += p;
        } else if f >= cfg.f_low_hz - BAND_EPS_HZ {
            inside += p;
        }
    }
    inside / (outside + BOI_EPS)
}

/// Return the series with the highest band-of-interest score (lowest index on ties).
pub fn boi_select<S: CandidateSource + ?Sized>(set: &S, cfg: &BoiConfig) -> Result<Candidate> {
    let t = set.num_snapshots();
    if t < BOI_MIN_SNAPSHOTS {
        return Err(Error::validation(format!(
            "band-of-interest selection needs at least {BOI_MIN_SNAPSHOTS} snapshots, got {t}"
        )));
    }
    let fs = set.snapshot_rate_hz();
    cfg.validate(fs)?;
    let n = set.num_candidates();
    if n == 0 {
        return Err(Error::TooFewSeries(0));
    }
    let pg = Periodogram::new(t);
    let mut best: Option<(f64, usize)> = None;
    for s in 0..n {
        let (series, _) = set.candidate(s);
        let score = boi_score_with(&pg, &series.to_complex(), fs, cfg);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, s));
        }
    }
    let (score, s) = best.expect("at least one candidate");
    let (series, provenance) = set.candidate(s);
    Ok(Candidate {
        series,
        provenance,
        score,
    })
}
