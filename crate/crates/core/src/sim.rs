//! Multipath channel simulator with a breathing chest reflection.
//!
//! Clean CSI follows the multipath sum
//! `H[t][i][j][m] = Σ_p A_p · exp(−j2π(Δf·m + f_c)·τ_p(t))`, where the single
//! dynamic path per antenna pair moves as
//! `τ(t) = τ_p + Δτ·sin(2π f_r t/f_s + φ0)`.
//!
//! Measurement distortion multiplies each entry by a per-snapshot, per-RX
//! AGC gain and a per-snapshot, per-TX linear phase `α·m + β`, then adds
//! circular complex white noise at a requested SNR (relative to the mean clean
//! power over all entries).
//!
//! Randomness comes from `ChaCha8` seeded with `seed_from_u64(rng_seed)`.
//! Draws are materialized up front in a fixed order: for each `t`, for each
//! TX `i` the slope then the intercept, then for each RX `j` the AGC gain.
//! Noise follows, in tensor order, real part then imaginary part, each
//! `N(0, 1/2)` before scaling. Uniform draws are `lo + (hi − lo)·u` with
//! `u ∈ [0, 1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::csi::{CsiSampleSet, RadioMeta, SampleTensor};
use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Round-trip delay swing for a 5 mm chest displacement.
pub const DEFAULT_DELAY_AMPLITUDE_S: f64 = 2.0 * 0.005 / SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    /// Complex attenuation `A_p`.
    pub gain: Complex64,
    /// Base delay `τ_p` in seconds.
    pub delay_s: f64,
    /// Whether this path follows the breathing motion.
    pub dynamic: bool,
}

impl PathSpec {
    pub fn fixed(gain: Complex64, delay_s: f64) -> Self {
        Self {
            gain,
            delay_s,
            dynamic: false,
        }
    }

    pub fn chest(gain: Complex64, delay_s: f64) -> Self {
        Self {
            gain,
            delay_s,
            dynamic: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreathingMotion {
    pub rate_hz: f64,
    /// Peak deviation of the round-trip delay, seconds.
    pub delay_amplitude_s: f64,
    pub phase0_rad: f64,
}

impl BreathingMotion {
    pub fn new(rate_hz: f64) -> Self {
        Self {
            rate_hz,
            delay_amplitude_s: DEFAULT_DELAY_AMPLITUDE_S,
            phase0_rad: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rate_hz.is_finite() && self.rate_hz > 0.0) {
            return Err(Error::validation(format!(
                "breathing rate must be positive, got {}",
                self.rate_hz
            )));
        }
        if !(self.delay_amplitude_s.is_finite() && self.delay_amplitude_s >= 0.0) {
            return Err(Error::validation("delay amplitude must be non-negative"));
        }
        if !self.phase0_rad.is_finite() {
            return Err(Error::validation("phase0 must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    /// AGC gain range, drawn per snapshot and RX antenna.
    pub agc_range: (f64, f64),
    /// Phase slope range (radians per subcarrier index), drawn per snapshot and TX antenna.
    pub phase_slope_range: (f64, f64),
    /// Phase intercept range (radians), drawn per snapshot and TX antenna.
    pub phase_intercept_range: (f64, f64),
    /// `None` disables noise.
    pub noise_snr_db: Option<f64>,
    pub rng_seed: u64,
}

impl DistortionSpec {
    /// No AGC, no phase offsets, no noise.
    pub fn identity() -> Self {
        Self {
            agc_range: (1.0, 1.0),
            phase_slope_range: (0.0, 0.0),
            phase_intercept_range: (0.0, 0.0),
            noise_snr_db: None,
            rng_seed: 0,
        }
    }

    /// AGC in `[0.5, 2]`, slope in `[−0.1, 0.1]`, intercept over the full circle.
    pub fn typical(noise_snr_db: Option<f64>, rng_seed: u64) -> Self {
        Self {
            agc_range: (0.5, 2.0),
            phase_slope_range: (-0.1, 0.1),
            phase_intercept_range: (-PI, PI),
            noise_snr_db,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.agc_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::validation(format!(
                "agc range must satisfy 0 < min <= max, got ({lo}, {hi})"
            )));
        }
        for (name, (lo, hi)) in [
            ("phase slope", self.phase_slope_range),
            ("phase intercept", self.phase_intercept_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::validation(format!(
                    "{name} range must satisfy min <= max, got ({lo}, {hi})"
                )));
            }
        }
        if let Some(snr) = self.noise_snr_db {
            if !snr.is_finite() {
                return Err(Error::validation("noise SNR must be finite"));
            }
        }
        Ok(())
    }
}

/// A complete simulation description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub meta: RadioMeta,
    /// Paths for each antenna pair, indexed `i·N_R + j`.
    pub paths: Vec<Vec<PathSpec>>,
    pub motion: BreathingMotion,
    pub distortion: DistortionSpec,
}

impl Scenario {
    /// One TX, two RX, 29 subcarriers at 703.125 kHz spacing, 5.32 GHz
    /// carrier, 297 snapshots at 9.9 Hz. Every antenna pair sees a static
    /// dominant path (unit gain, 5 ns) and a chest reflection (gain 0.2,
    /// about 30 ns). The chest delay differs by a quarter carrier period
    /// between RX antennas so their phase differences carry the motion.
    pub fn single_person(rate_hz: f64, noise_snr_db: Option<f64>, seed: u64) -> Self {
        let meta = RadioMeta {
            num_snapshots: 297,
            num_tx: 1,
            num_rx: 2,
            num_subcarriers: 29,
            snapshot_rate_hz: 9.9,
            subcarrier_spacing_hz: 703_125.0,
            carrier_freq_hz: 5.32e9,
        };
        let quarter_cycle = 0.25 / meta.carrier_freq_hz;
        let paths = (0..meta.num_tx * meta.num_rx)
            .map(|pair| {
                let j = pair % meta.num_rx;
                vec![
                    PathSpec::fixed(Complex64::new(1.0, 0.0), 5e-9),
                    PathSpec::chest(Complex64::new(0.2, 0.0), 30e-9 + j as f64 * quarter_cycle),
                ]
            })
            .collect();
        Self {
            meta,
            paths,
            motion: BreathingMotion::new(rate_hz),
            distortion: DistortionSpec::typical(noise_snr_db, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.meta.validate()?;
        self.motion.validate()?;
        self.distortion.validate()?;
        let pairs = self.meta.num_tx * self.meta.num_rx;
        if self.paths.len() != pairs {
            return Err(Error::validation(format!(
                "expected path lists for {pairs} antenna pairs, got {}",
                self.paths.len()
            )));
        }
        let alias_limit = 1.0 / self.meta.subcarrier_spacing_hz;
        for (pair, list) in self.paths.iter().enumerate() {
            let (i, j) = (pair / self.meta.num_rx, pair % self.meta.num_rx);
            let dynamic = list.iter().filter(|p| p.dynamic).count();
            if dynamic != 1 {
                return Err(Error::validation(format!(
                    "antenna pair (tx {i}, rx {j}) has {dynamic} dynamic paths; exactly one required"
                )));
            }
            for p in list {
                if !(p.gain.norm() > 0.0 && p.gain.re.is_finite() && p.gain.im.is_finite()) {
                    return Err(Error::validation(format!(
                        "path gain must be non-zero and finite (tx {i}, rx {j})"
                    )));
                }
                if !(p.delay_s.is_finite() && p.delay_s >= 0.0) {
                    return Err(Error::validation(format!(
                        "path delay must be non-negative (tx {i}, rx {j})"
                    )));
                }
                let reach = if p.dynamic {
                    p.delay_s + self.motion.delay_amplitude_s
                } else {
                    p.delay_s
                };
                if reach >= alias_limit {
                    return Err(Error::validation(format!(
                        "path delay {reach:e} s reaches the alias limit 1/Δf = {alias_limit:e} s (tx {i}, rx {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Noise-free CSI for a scenario.
pub fn synth_clean(s: &Scenario) -> Result<CsiSampleSet> {
    s.validate()?;
    let meta = s.meta;
    let motion = s.motion;
    CsiSampleSet::from_fn(meta, |t, i, j, m| {
        let f = meta.subcarrier_spacing_hz * m as f64 + meta.carrier_freq_hz;
        s.paths[i * meta.num_rx + j]
            .iter()
            .map(|p| {
                let tau = if p.dynamic {
                    let arg = 2.0 * PI * motion.rate_hz * t as f64 / meta.snapshot_rate_hz
                        + motion.phase0_rad;
                    p.delay_s + motion.delay_amplitude_s * arg.sin()
                } else {
                    p.delay_s
                };
                p.gain * Complex64::from_polar(1.0, -2.0 * PI * f * tau)
            })
            .sum()
    })
}

/// Random draws behind one distortion application.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionDraws {
    meta: RadioMeta,
    /// `[t][j]`
    pub agc: Vec<f64>,
    /// `[t][i]`
    pub phase_slope: Vec<f64>,
    /// `[t][i]`
    pub phase_intercept: Vec<f64>,
    /// Unit-power complex normals in tensor order; scaled at application time.
    noise: Option<Vec<Complex64>>,
    noise_snr_db: Option<f64>,
}

impl DistortionDraws {
    pub fn agc_at(&self, t: usize, j: usize) -> f64 {
        self.agc[t * self.meta.num_rx + j]
    }

    /// `(α, β)` for snapshot `t`, TX antenna `i`.
    pub fn phase_at(&self, t: usize, i: usize) -> (f64, f64) {
        let k = t * self.meta.num_tx + i;
        (self.phase_slope[k], self.phase_intercept[k])
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Materialize every random quantity for `meta` under `spec`.
pub fn draw_distortion(meta: &RadioMeta, spec: &DistortionSpec) -> Result<DistortionDraws> {
    meta.validate()?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let (t_n, nt, nr) = (meta.num_snapshots, meta.num_tx, meta.num_rx);
    let mut agc = Vec::with_capacity(t_n * nr);
    let mut slope = Vec::with_capacity(t_n * nt);
    let mut intercept = Vec::with_capacity(t_n * nt);
    for _ in 0..t_n {
        for _ in 0..nt {
            slope.push(uniform(&mut rng, spec.phase_slope_range));
            intercept.push(uniform(&mut rng, spec.phase_intercept_range));
        }
        for _ in 0..nr {
            agc.push(uniform(&mut rng, spec.agc_range));
        }
    }
    let noise = spec.noise_snr_db.map(|_| {
        let half = std::f64::consts::FRAC_1_SQRT_2;
        (0..meta.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * half, im * half)
            })
            .collect()
    });
    Ok(DistortionDraws {
        meta: *meta,
        agc,
        phase_slope: slope,
        phase_intercept: intercept,
        noise,
        noise_snr_db: spec.noise_snr_db,
    })
}

/// Apply previously drawn distortions to clean CSI.
pub fn apply_draws(clean: &CsiSampleSet, draws: &DistortionDraws) -> Result<CsiSampleSet> {
    let meta = *clean.meta();
    if meta != draws.meta {
        return Err(Error::validation("distortion draws were made for a different shape"));
    }
    let noise_scale = match draws.noise_snr_db {
        Some(snr) => {
            let power = clean.data().iter().map(|z| z.norm_sqr()).sum::<f64>() / meta.len() as f64;
            (power / 10f64.powf(snr / 10.0)).sqrt()
        }
        None => 0.0,
    };
    let mut out = Vec::with_capacity(meta.len());
    for t in 0..meta.num_snapshots {
        for i in 0..meta.num_tx {
            let (alpha, beta) = draws.phase_at(t, i);
            for j in 0..meta.num_rx {
                let gain = draws.agc_at(t, j);
                for (m, &h) in clean.slice(t, i, j).iter().enumerate() {
                    let phasor = Complex64::from_polar(1.0, alpha * m as f64 + beta);
                    out.push(h * gain * phasor);
                }
            }
        }
    }
    if let Some(noise) = &draws.noise {
        for (z, n) in out.iter_mut().zip(noise) {
            *z += n * noise_scale;
        }
    }
    CsiSampleSet::new(meta, out)
}

/// AGC, linear phase offsets and noise on top of clean CSI.
pub fn apply_distortion(clean: &CsiSampleSet, spec: &DistortionSpec) -> Result<CsiSampleSet> {
    let draws = draw_distortion(clean.meta(), spec)?;
    apply_draws(clean, &draws)
}

/// Clean synthesis followed by the scenario's distortion.
pub fn simulate(s: &Scenario) -> Result<CsiSampleSet> {
    apply_distortion(&synth_clean(s)?, &s.distortion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::wrap_phase;
    use crate::csi::csi_to_cir;
    use crate::detect::psd;
    use crate::series::Series;

    fn one_path_scenario(path: PathSpec, motion: BreathingMotion) -> Scenario {
        let mut s = Scenario::single_person(0.25, None, 0);
        s.meta.num_snapshots = 64;
        s.paths = vec![vec![path]; 2];
        s.motion = motion;
        s.distortion = DistortionSpec::identity();
        s
    }

    #[test]
    fn zero_delay_unit_path_is_flat() {
        let s = one_path_scenario(PathSpec::chest(Complex64::new(1.0, 0.0), 0.0), {
            let mut m = BreathingMotion::new(0.25);
            m.delay_amplitude_s = 0.0;
            m
        });
        let h = synth_clean(&s).unwrap();
        assert!(h.data().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn one_bin_delay_lands_on_bin_one() {
        let mut s = Scenario::single_person(0.25, None, 0);
        s.meta.num_snapshots = 4;
        let tau = s.meta.delay_resolution_s();
        s.paths = vec![vec![PathSpec::chest(Complex64::new(1.0, 0.0), tau)]; 2];
        s.motion.delay_amplitude_s = 0.0;
        let cir = csi_to_cir(&synth_clean(&s).unwrap());
        for t in 0..4 {
            let sl = cir.slice(t, 0, 1);
            assert!((sl[1].norm() - 1.0).abs() < 1e-9);
            for (k, z) in sl.iter().enumerate() {
                if k != 1 {
                    assert!(z.norm() < 1e-9, "bin {k}: {z}");
                }
            }
        }
    }

    #[test]
    fn chest_path_phase_oscillates_at_breathing_rate() {
        let mut s = Scenario::single_person(0.25, None, 0);
        s.paths = vec![vec![PathSpec::chest(Complex64::new(1.0, 0.0), 20e-9)]; 2];
        let h = synth_clean(&s).unwrap();
        let series = h.series(0, 0, 0);
        let mut phase: Vec<f64> = series.iter().map(|z| z.arg()).collect();
        for k in 1..phase.len() {
            phase[k] = phase[k - 1] + wrap_phase(phase[k] - phase[k - 1]);
        }
        let spec = psd(&Series::Real(phase), 9.9, Some(0.001));
        let (f, _) = spec.one_sided().argmax().unwrap();
        assert!((f - 0.25).abs() < 0.005, "peak at {f}");
    }

    #[test]
    fn identity_distortion_is_bit_exact() {
        let s = Scenario::single_person(0.3, None, 0);
        let clean = synth_clean(&s).unwrap();
        let out = apply_distortion(&clean, &DistortionSpec::identity()).unwrap();
        assert_eq!(out.data(), clean.data());
    }

    #[test]
    fn constant_agc_doubles_exactly() {
        let s = Scenario::single_person(0.3, None, 0);
        let clean = synth_clean(&s).unwrap();
        let mut spec = DistortionSpec::identity();
        spec.agc_range = (2.0, 2.0);
        let out = apply_distortion(&clean, &spec).unwrap();
        for (a, b) in out.data().iter().zip(clean.data()) {
            assert_eq!(*a, b * 2.0);
        }
    }

    #[test]
    fn seeded_distortion_is_deterministic() {
        let s = Scenario::single_person(0.3, Some(20.0), 42);
        let clean = synth_clean(&s).unwrap();
        let spec = DistortionSpec {
            agc_range: (0.5, 2.0),
            phase_slope_range: (-0.1, 0.1),
            phase_intercept_range: (-PI, PI),
            noise_snr_db: Some(20.0),
            rng_seed: 42,
        };
        let a = apply_distortion(&clean, &spec).unwrap();
        let b = apply_distortion(&clean, &spec).unwrap();
        assert_eq!(a.data(), b.data());
        let mut other = spec;
        other.rng_seed = 43;
        assert_ne!(apply_distortion(&clean, &other).unwrap().data(), a.data());
    }

    #[test]
    fn offsets_and_agc_are_shared_as_declared() {
        let s = Scenario::single_person(0.3, None, 0);
        let clean = synth_clean(&s).unwrap();
        let spec = DistortionSpec::typical(None, 11);
        let draws = draw_distortion(clean.meta(), &spec).unwrap();
        let dist = apply_draws(&clean, &draws).unwrap();
        let meta = *clean.meta();
        for t in 0..meta.num_snapshots {
            for i in 0..meta.num_tx {
                let (alpha, beta) = draws.phase_at(t, i);
                for j in 0..meta.num_rx {
                    let g = draws.agc_at(t, j);
                    for m in 0..meta.num_subcarriers {
                        let ratio = dist.get(t, i, j, m) / clean.get(t, i, j, m);
                        assert!(wrap_phase(ratio.arg() - (alpha * m as f64 + beta)).abs() < 1e-9);
                        assert!((ratio.norm() - g).abs() < 1e-12 * g);
                    }
                }
            }
        }
    }

    #[test]
    fn noise_hits_requested_snr() {
        let s = Scenario::single_person(0.3, Some(10.0), 5);
        let clean = synth_clean(&s).unwrap();
        let mut spec = DistortionSpec::identity();
        spec.noise_snr_db = Some(10.0);
        spec.rng_seed = 5;
        let noisy = apply_distortion(&clean, &spec).unwrap();
        let p_sig: f64 = clean.data().iter().map(|z| z.norm_sqr()).sum();
        let p_noise: f64 = noisy.data().iter().zip(clean.data()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let snr_db = 10.0 * (p_sig / p_noise).log10();
        assert!((snr_db - 10.0).abs() < 0.3, "snr {snr_db}");
    }

    #[test]
    fn validation_catches_bad_scenarios() {
        let mut s = Scenario::single_person(0.3, None, 0);
        s.paths[0].push(PathSpec::chest(Complex64::new(0.1, 0.0), 1e-8));
        assert!(synth_clean(&s).is_err());

        let mut s = Scenario::single_person(0.3, None, 0);
        s.paths[1][0].delay_s = 1.0 / s.meta.subcarrier_spacing_hz;
        assert!(synth_clean(&s).is_err());

        let mut s = Scenario::single_person(0.3, None, 0);
        s.distortion.agc_range = (0.0, 1.0);
        assert!(simulate(&s).is_err());
    }
}
