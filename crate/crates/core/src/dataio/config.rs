//! Scenario and system configuration files.
//!
//! Both use TOML: `key = value` lines grouped under `[section]` headers.
//! Parse errors carry the 1-based line number of the offending entry.
//!
//! Scenario file:
//!
//! ```toml
//! [radio]
//! num_snapshots = 297
//! num_tx = 1
//! num_rx = 2
//! num_subcarriers = 29
//! snapshot_rate_hz = 9.9
//! subcarrier_spacing_hz = 703125.0
//! carrier_freq_hz = 5.32e9
//!
//! [motion]
//! rate_hz = 0.25
//! # delay_amplitude_s = 3.3356e-11   (5 mm chest displacement)
//! # phase0_rad = 0.0
//!
//! [distortion]            # every key optional; defaults shown
//! agc_min = 0.5
//! agc_max = 2.0
//! slope_min = -0.1        # rad per subcarrier index
//! slope_max = 0.1
//! intercept_min = -3.141592653589793
//! intercept_max = 3.141592653589793
//! noise_snr_db = 30.0     # or "none" (the default when absent)
//! seed = 7
//!
//! [[path]]                # applies to every antenna pair unless tx/rx given
//! gain_re = 1.0
//! delay_s = 5e-9
//!
//! [[path]]
//! gain_re = 0.2
//! delay_s = 30e-9
//! dynamic = true
//! ```
//!
//! System file: `system = "<name>"` plus any [`SystemConfig`] field to
//! override, e.g. `q_threshold = 0.25` or `[boi] f_low_hz = 0.1`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csi::RadioMeta;
use crate::detect::PeakConfig;
use crate::error::{Error, Result};
use crate::pipeline::{SystemConfig, SystemName};
use crate::select::BoiConfig;
use crate::sim::{BreathingMotion, DistortionSpec, PathSpec, Scenario, DEFAULT_DELAY_AMPLITUDE_S};

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    radio: RadioMeta,
    motion: MotionSection,
    #[serde(default)]
    distortion: DistortionSection,
    #[serde(rename = "path", default)]
    paths: Vec<PathEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionSection {
    rate_hz: f64,
    #[serde(default = "default_delay_amplitude")]
    delay_amplitude_s: f64,
    #[serde(default)]
    phase0_rad: f64,
}

fn default_delay_amplitude() -> f64 {
    DEFAULT_DELAY_AMPLITUDE_S
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Snr {
    Db(f64),
    Keyword(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistortionSection {
    #[serde(default = "agc_min")]
    agc_min: f64,
    #[serde(default = "agc_max")]
    agc_max: f64,
    #[serde(default = "slope_min")]
    slope_min: f64,
    #[serde(default = "slope_max")]
    slope_max: f64,
    #[serde(default = "intercept_min")]
    intercept_min: f64,
    #[serde(default = "intercept_max")]
    intercept_max: f64,
    noise_snr_db: Option<Snr>,
    #[serde(default)]
    seed: u64,
}

fn agc_min() -> f64 {
    0.5
}
fn agc_max() -> f64 {
    2.0
}
fn slope_min() -> f64 {
    -0.1
}
fn slope_max() -> f64 {
    0.1
}
fn intercept_min() -> f64 {
    -PI
}
fn intercept_max() -> f64 {
    PI
}

impl Default for DistortionSection {
    fn default() -> Self {
        Self {
            agc_min: agc_min(),
            agc_max: agc_max(),
            slope_min: slope_min(),
            slope_max: slope_max(),
            intercept_min: intercept_min(),
            intercept_max: intercept_max(),
            noise_snr_db: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathEntry {
    gain_re: f64,
    #[serde(default)]
    gain_im: f64,
    delay_s: f64,
    #[serde(default)]
    dynamic: bool,
    tx: Option<usize>,
    rx: Option<usize>,
}

/// Parse a scenario description.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = parse_toml(text)?;
    let meta = file.radio;
    meta.validate()?;
    let d = file.distortion;
    let noise_snr_db = match d.noise_snr_db {
        None => None,
        Some(Snr::Db(v)) => Some(v),
        Some(Snr::Keyword(k)) if k == "none" => None,
        Some(Snr::Keyword(k)) => {
            return Err(Error::Config {
                line: text.find("noise_snr_db").map_or(0, |o| line_of(text, o)),
                message: format!("noise_snr_db must be a number or \"none\", got {k:?}"),
            })
        }
    };
    let mut paths = vec![Vec::new(); meta.num_tx * meta.num_rx];
    for (n, p) in file.paths.iter().enumerate() {
        for tx in 0..meta.num_tx {
            for rx in 0..meta.num_rx {
                if p.tx.is_some_and(|t| t != tx) || p.rx.is_some_and(|r| r != rx) {
                    continue;
                }
                paths[tx * meta.num_rx + rx].push(PathSpec {
                    gain: Complex64::new(p.gain_re, p.gain_im),
                    delay_s: p.delay_s,
                    dynamic: p.dynamic,
                });
            }
        }
        if p.tx.is_some_and(|t| t >= meta.num_tx) || p.rx.is_some_and(|r| r >= meta.num_rx) {
            return Err(Error::validation(format!(
                "path {} addresses an antenna outside {}x{}",
                n + 1,
                meta.num_tx,
                meta.num_rx
            )));
        }
    }
    let scenario = Scenario {
        meta,
        paths,
        motion: BreathingMotion {
            rate_hz: file.motion.rate_hz,
            delay_amplitude_s: file.motion.delay_amplitude_s,
            phase0_rad: file.motion.phase0_rad,
        },
        distortion: DistortionSpec {
            agc_range: (d.agc_min, d.agc_max),
            phase_slope_range: (d.slope_min, d.slope_max),
            phase_intercept_range: (d.intercept_min, d.intercept_max),
            noise_snr_db,
            rng_seed: d.seed,
        },
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    system: SystemName,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hampel_window_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hampel_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_max_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psd_resolution_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    amplitude_half_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    boi: Option<BoiConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    peak: Option<PeakConfig>,
}

/// Parse a system file: defaults for the named system, then overrides.
pub fn parse_system_config(text: &str) -> Result<SystemConfig> {
    let f: SystemFile = parse_toml(text)?;
    let mut cfg = SystemConfig::new(f.system);
    if let Some(v) = f.q_threshold {
        cfg.q_threshold = v;
    }
    if let Some(v) = f.hampel_window_s {
        cfg.hampel_window_s = v;
    }
    if let Some(v) = f.hampel_threshold {
        cfg.hampel_threshold = v;
    }
    if f.tau_max_s.is_some() {
        cfg.tau_max_s = f.tau_max_s;
    }
    if let Some(v) = f.psd_resolution_hz {
        cfg.psd_resolution_hz = v;
    }
    if let Some(v) = f.amplitude_half_width {
        cfg.amplitude_half_width = v;
    }
    if let Some(v) = f.fit_window {
        cfg.fit_window = v;
    }
    if let Some(v) = f.boi {
        cfg.boi = v;
    }
    if let Some(v) = f.peak {
        cfg.peak = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Serialize every field of `cfg` in the system-file format.
pub fn system_config_to_toml(cfg: &SystemConfig) -> String {
    let f = SystemFile {
        system: cfg.name,
        q_threshold: Some(cfg.q_threshold),
        hampel_window_s: Some(cfg.hampel_window_s),
        hampel_threshold: Some(cfg.hampel_threshold),
        tau_max_s: cfg.tau_max_s,
        psd_resolution_hz: Some(cfg.psd_resolution_hz),
        amplitude_half_width: Some(cfg.amplitude_half_width),
        fit_window: Some(cfg.fit_window),
        boi: Some(cfg.boi),
        peak: Some(cfg.peak),
    };
    toml::to_string(&f).expect("plain data serializes")
}

pub fn read_system_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    parse_system_config(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::list_systems;

    const SCENARIO: &str = r#"
[radio]
num_snapshots = 297
num_tx = 1
num_rx = 2
num_subcarriers = 29
snapshot_rate_hz = 9.9
subcarrier_spacing_hz = 703125.0
carrier_freq_hz = 5.32e9

[motion]
rate_hz = 0.25

[distortion]
noise_snr_db = 30.0
seed = 7

[[path]]
gain_re = 1.0
delay_s = 5e-9

[[path]]
gain_re = 0.2
delay_s = 30e-9
dynamic = true
rx = 0

[[path]]
gain_re = 0.2
delay_s = 30.047e-9
dynamic = true
rx = 1
"#;

    #[test]
    fn parses_scenario() {
        let s = parse_scenario(SCENARIO).unwrap();
        assert_eq!(s.meta.num_subcarriers, 29);
        assert_eq!(s.paths.len(), 2);
        assert_eq!(s.paths[0].len(), 2);
        assert_eq!(s.paths[1][1].delay_s, 30.047e-9);
        assert_eq!(s.distortion.noise_snr_db, Some(30.0));
        assert_eq!(s.distortion.agc_range, (0.5, 2.0));
        assert_eq!(s.distortion.rng_seed, 7);
        assert_eq!(s.motion.delay_amplitude_s, DEFAULT_DELAY_AMPLITUDE_S);
    }

    #[test]
    fn noise_keyword() {
        let t = SCENARIO.replace("noise_snr_db = 30.0", "noise_snr_db = \"none\"");
        assert_eq!(parse_scenario(&t).unwrap().distortion.noise_snr_db, None);
        let t = SCENARIO.replace("noise_snr_db = 30.0", "noise_snr_db = \"loud\"");
        assert!(matches!(parse_scenario(&t), Err(Error::Config { line: 15, .. })));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let t = SCENARIO.replace("rate_hz = 0.25", "rate_hz = fast");
        match parse_scenario(&t) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 12),
            other => panic!("{other:?}"),
        }
        let t = SCENARIO.replace("seed = 7", "seed = 7\nsneed = 1");
        match parse_scenario(&t) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 17);
                assert!(message.contains("sneed"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        // second dynamic path on rx 0
        let t = SCENARIO.replace("rx = 1", "rx = 0");
        assert!(matches!(parse_scenario(&t), Err(Error::Validation(_))));
        let t = SCENARIO.replace("rx = 1", "rx = 5");
        assert!(parse_scenario(&t).is_err());
    }

    #[test]
    fn system_config_round_trip() {
        for cfg in list_systems() {
            let text = system_config_to_toml(&cfg);
            assert_eq!(parse_system_config(&text).unwrap(), cfg, "{text}");
        }
        let c = parse_system_config("system = \"phasebeat\"\nq_threshold = 0.3\n").unwrap();
        assert_eq!(c.q_threshold, 0.3);
        assert_eq!(c.hampel_window_s, 5.0);
        assert!(matches!(
            parse_system_config("system = \"nope\"\n"),
            Err(Error::Config { line: 1, .. })
        ));
    }
}
