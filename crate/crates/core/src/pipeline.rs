//! The six named breathing-rate systems.
//!
//! | system              | conditioning                         | selection | detection |
//! |---------------------|--------------------------------------|-----------|-----------|
//! | `phasebeat`         | phase difference, Hampel, db4         | MAD       | peaks     |
//! | `phasebeat-mad-psd` | phase difference, Hampel, db4         | MAD       | PSD       |
//! | `phasebeat-boi-psd` | phase difference, Hampel, db4         | BoI       | PSD       |
//! | `complexbeat-cir`   | calibration, CIR                     | BoI       | PSD       |
//! | `complexbeat-csi`   | calibration                          | BoI       | PSD       |
//! | `complexbeat-csi-df`| calibration, delay filter            | BoI       | PSD       |
//!
//! Every system first computes the stability score `Q` on RX phase
//! differences and skips windows with `Q ≥ q_threshold`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calib::{amplitude_calibrate, phase_calibrate, phase_difference};
use crate::csi::{csi_to_cir, CsiSampleSet, SampleTensor};
use crate::detect::{peak_detect_with, psd_detect_with, BreathingEstimate, DetectMethod, PeakConfig, PSD_RESOLUTION_HZ};
use crate::error::{Error, Result, Stage};
use crate::filt::{band_pass, delay_filter, dwt_db4_approx, hampel_detrend};
use crate::select::{boi_select, mad_select, passes_gate, stability_score, BoiConfig, Candidate, Q_THRESHOLD};
use crate::series::Series;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemName {
    Phasebeat,
    PhasebeatMadPsd,
    PhasebeatBoiPsd,
    ComplexbeatCir,
    ComplexbeatCsi,
    ComplexbeatCsiDf,
}

impl SystemName {
    pub const ALL: [SystemName; 6] = [
        SystemName::Phasebeat,
        SystemName::PhasebeatMadPsd,
        SystemName::PhasebeatBoiPsd,
        SystemName::ComplexbeatCir,
        SystemName::ComplexbeatCsi,
        SystemName::ComplexbeatCsiDf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemName::Phasebeat => "phasebeat",
            SystemName::PhasebeatMadPsd => "phasebeat-mad-psd",
            SystemName::PhasebeatBoiPsd => "phasebeat-boi-psd",
            SystemName::ComplexbeatCir => "complexbeat-cir",
            SystemName::ComplexbeatCsi => "complexbeat-csi",
            SystemName::ComplexbeatCsiDf => "complexbeat-csi-df",
        }
    }

    pub fn is_complexbeat(self) -> bool {
        matches!(
            self,
            SystemName::ComplexbeatCir | SystemName::ComplexbeatCsi | SystemName::ComplexbeatCsiDf
        )
    }

    pub fn method(self) -> DetectMethod {
        match self {
            SystemName::Phasebeat => DetectMethod::Peak,
            _ => DetectMethod::Psd,
        }
    }
}

impl fmt::Display for SystemName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SystemName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::UnknownSystem {
                name: s.to_string(),
                valid: SystemName::ALL.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(", "),
            })
    }
}

/// Full parameter set of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub name: SystemName,
    /// Windows with `Q ≥ q_threshold` are not analysed.
    pub q_threshold: f64,
    pub boi: BoiConfig,
    pub hampel_window_s: f64,
    pub hampel_threshold: f64,
    /// Delay-filter bound; only set for `complexbeat-csi-df`.
    pub tau_max_s: Option<f64>,
    pub psd_resolution_hz: f64,
    /// Half width `D` of the dominant-path energy window.
    pub amplitude_half_width: usize,
    /// Subcarriers in the linear phase fit.
    pub fit_window: usize,
    /// Fake-peak removal; separation uses `f_max_hz`.
    pub peak: PeakConfig,
}

impl SystemConfig {
    pub fn new(name: SystemName) -> Self {
        let boi = BoiConfig::default();
        Self {
            name,
            q_threshold: Q_THRESHOLD,
            boi,
            hampel_window_s: 5.0,
            hampel_threshold: 0.01,
            tau_max_s: (name == SystemName::ComplexbeatCsiDf).then_some(50e-9),
            psd_resolution_hz: PSD_RESOLUTION_HZ,
            amplitude_half_width: 1,
            fit_window: 8,
            peak: PeakConfig::new(boi.f_high_hz),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_threshold.is_nan() || self.q_threshold <= 0.0 {
            return Err(Error::validation("q_threshold must be positive"));
        }
        if !(self.psd_resolution_hz.is_finite() && self.psd_resolution_hz > 0.0) {
            return Err(Error::validation("psd_resolution_hz must be positive"));
        }
        match (self.name, self.tau_max_s) {
            (SystemName::ComplexbeatCsiDf, None) => {
                Err(Error::validation("complexbeat-csi-df needs tau_max_s"))
            }
            (SystemName::ComplexbeatCsiDf, Some(t)) if t.is_nan() || t <= 0.0 => {
                Err(Error::validation("tau_max_s must be positive"))
            }
            (n, Some(_)) if n != SystemName::ComplexbeatCsiDf => Err(Error::validation(format!(
                "tau_max_s only applies to complexbeat-csi-df, not {n}"
            ))),
            _ => Ok(()),
        }
    }
}

/// The six systems with their default parameters.
pub fn list_systems() -> Vec<SystemConfig> {
    SystemName::ALL.into_iter().map(SystemConfig::new).collect()
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}

/// Estimate the breathing rate of one analysis window.
pub fn run_window(csi: &CsiSampleSet, cfg: &SystemConfig) -> Result<BreathingEstimate> {
    cfg.validate()?;
    let fs = csi.meta().snapshot_rate_hz;
    cfg.boi.validate(fs)?;

    let pd = phase_difference(csi);
    let q = stability_score(&pd);
    if !passes_gate(q, cfg.q_threshold) {
        return Ok(BreathingEstimate::rejected(cfg.name.method(), q));
    }

    let (candidate, mut estimate) = if cfg.name.is_complexbeat() {
        complexbeat(csi, cfg)?
    } else {
        phasebeat(pd, cfg)?
    };
    estimate.stability_score = Some(q);
    estimate.candidate = Some(candidate.provenance);
    estimate.candidate_score = Some(candidate.score);
    Ok(estimate)
}

fn phasebeat(
    pd: crate::calib::PhaseDiffSet,
    cfg: &SystemConfig,
) -> Result<(Candidate, BreathingEstimate)> {
    let fs = pd.snapshot_rate_hz();
    let ac = pd
        .map_series(|x| Ok(hampel_detrend(x, cfg.hampel_window_s, cfg.hampel_threshold, fs)?.ac))
        .stage(Stage::Hampel)?;
    let candidate = match cfg.name {
        SystemName::PhasebeatBoiPsd => boi_select(&ac, &cfg.boi),
        _ => mad_select(&ac),
    }
    .stage(Stage::Selection)?;
    let series = candidate.series.as_real().expect("phase differences are real");
    let smooth = dwt_db4_approx(series, fs).stage(Stage::Wavelet)?;
    let estimate = match cfg.name {
        SystemName::Phasebeat => peak_detect_with(&smooth, fs, &cfg.peak),
        _ => psd_detect_with(
            &Series::Real(smooth),
            fs,
            cfg.boi.f_low_hz,
            cfg.boi.f_high_hz,
            cfg.psd_resolution_hz,
        ),
    }
    .stage(Stage::Detection)?;
    Ok((candidate, estimate))
}

fn complexbeat(csi: &CsiSampleSet, cfg: &SystemConfig) -> Result<(Candidate, BreathingEstimate)> {
    let fs = csi.meta().snapshot_rate_hz;
    let amp = amplitude_calibrate(csi, cfg.amplitude_half_width).stage(Stage::AmplitudeCalibration)?;
    let cal = phase_calibrate(&amp, cfg.fit_window).stage(Stage::PhaseCalibration)?;
    let candidate = match cfg.name {
        SystemName::ComplexbeatCir => boi_select(&csi_to_cir(&cal), &cfg.boi),
        SystemName::ComplexbeatCsiDf => {
            let tau = cfg.tau_max_s.expect("validated");
            let filtered = delay_filter(&cal, tau).stage(Stage::DelayFilter)?;
            boi_select(&filtered, &cfg.boi)
        }
        _ => boi_select(&cal, &cfg.boi),
    }
    .stage(Stage::Selection)?;
    let filtered = band_pass(&candidate.series.to_complex(), cfg.boi.f_low_hz, cfg.boi.f_high_hz, fs)
        .stage(Stage::BandPass)?;
    let estimate = psd_detect_with(
        &Series::Complex(filtered),
        fs,
        cfg.boi.f_low_hz,
        cfg.boi.f_high_hz,
        cfg.psd_resolution_hz,
    )
    .stage(Stage::Detection)?;
    Ok((candidate, estimate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{simulate, Scenario};

    #[test]
    fn names_round_trip() {
        for n in SystemName::ALL {
            assert_eq!(n.as_str().parse::<SystemName>().unwrap(), n);
            assert_eq!(n.to_string(), n.as_str());
        }
        let err = "bogus".parse::<SystemName>().unwrap_err();
        assert!(err.to_string().contains("complexbeat-csi-df"));
    }

    #[test]
    fn defaults() {
        let all = list_systems();
        assert_eq!(all.len(), 6);
        for c in &all {
            assert_eq!(c.q_threshold, 0.18);
            assert_eq!(c.boi, BoiConfig { f_low_hz: 0.2, f_high_hz: 0.5 });
            assert_eq!(c.tau_max_s.is_some(), c.name == SystemName::ComplexbeatCsiDf);
            c.validate().unwrap();
        }
        assert_eq!(SystemConfig::new(SystemName::ComplexbeatCsiDf).tau_max_s, Some(50e-9));
    }

    #[test]
    fn df_only_setting_is_rejected_elsewhere() {
        let mut c = SystemConfig::new(SystemName::ComplexbeatCsi);
        c.tau_max_s = Some(50e-9);
        assert!(c.validate().is_err());
    }

    #[test]
    fn csi_df_recovers_simulated_rate() {
        let s = Scenario::single_person(0.25, Some(30.0), 7);
        let est = run_window(&simulate(&s).unwrap(), &SystemConfig::new(SystemName::ComplexbeatCsiDf)).unwrap();
        assert!(est.stable);
        let r = est.rate_hz.unwrap();
        assert!((r - 0.25).abs() <= 0.01, "rate {r}");
    }

    #[test]
    fn phasebeat_boi_recovers_simulated_rate() {
        let s = Scenario::single_person(0.25, Some(30.0), 7);
        let est = run_window(&simulate(&s).unwrap(), &SystemConfig::new(SystemName::PhasebeatBoiPsd)).unwrap();
        let r = est.rate_hz.unwrap();
        assert!((r - 0.25).abs() <= 0.02, "rate {r}");
    }

    #[test]
    fn deterministic() {
        let x = simulate(&Scenario::single_person(0.3, Some(20.0), 11)).unwrap();
        for c in list_systems() {
            let a = run_window(&x, &c);
            let b = run_window(&x, &c);
            assert_eq!(a.ok(), b.ok(), "{}", c.name);
        }
    }

    #[test]
    fn violent_noise_is_gated() {
        let mut s = Scenario::single_person(0.3, Some(-10.0), 5);
        s.distortion.phase_slope_range = (-3.0, 3.0);
        let x = simulate(&s).unwrap();
        for c in list_systems() {
            let est = run_window(&x, &c).unwrap();
            assert!(!est.stable);
            assert!(est.rate_hz.is_none());
            assert!(est.stability_score.unwrap() >= 0.18);
        }
    }

    #[test]
    fn stage_errors_are_tagged() {
        let mut s = Scenario::single_person(0.3, None, 0);
        s.meta.num_snapshots = 40; // too short for the level-3 wavelet
        let x = simulate(&s).unwrap();
        let err = run_window(&x, &SystemConfig::new(SystemName::Phasebeat)).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: Stage::Wavelet, .. }), "{err:?}");
    }
}
