//! Breathing-rate estimation from WiFi channel state information.
//!
//! The crate covers the whole chain from a CSI tensor `[t][tx][rx][subcarrier]`
//! to a rate in Hz:
//!
//! * [`csi`]: tensor types and the CSI ↔ CIR transform,
//! * [`calib`]: AGC and phase-offset removal, RX phase differences,
//! * [`select`]: stability gate and candidate-series selection,
//! * [`filt`]: Hampel trend removal, db4 wavelet, delay and band filters,
//! * [`detect`]: periodogram and peak-interval rate detection,
//! * [`pipeline`]: the six named systems,
//! * [`sim`]: a seeded multipath channel simulator used as a test oracle,
//! * [`dataio`] and [`eval`]: file formats, windowing and error reporting.

pub mod calib;
pub mod csi;
pub mod dataio;
pub mod detect;
pub mod error;
pub mod eval;
pub mod filt;
pub mod pipeline;
pub mod select;
pub mod series;
pub mod sim;

pub use calib::{amplitude_calibrate, phase_calibrate, phase_difference, PhaseDiffSet};
pub use csi::{cir_to_csi, csi_to_cir, CirSampleSet, CsiSampleSet, RadioMeta, SampleTensor};
pub use detect::{BreathingEstimate, DetectMethod, Domain, Provenance};
pub use error::{Error, Result, Stage};
pub use pipeline::{list_systems, run_window, SystemConfig, SystemName};
pub use select::{BoiConfig, Candidate};
pub use series::Series;
pub use sim::{simulate, Scenario};
pub use dataio::{read_recording, write_recording, GroundTruthTrack};
pub use eval::{compare_systems, evaluate, EvalOptions, ErrorReport};
