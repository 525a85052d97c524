//! Shared fixtures for the benchmarks.

use csi_breath::{simulate, CsiSampleSet, Scenario};

/// One 30 s window (297 snapshots, 2 RX, 29 subcarriers) at a 30 dB SNR.
pub fn window() -> CsiSampleSet {
    simulate(&Scenario::single_person(0.3, Some(30.0), 7)).expect("default scenario simulates")
}

/// A recording of `seconds` seconds with the same geometry as [`window`].
pub fn recording(seconds: f64) -> CsiSampleSet {
    let mut s = Scenario::single_person(0.3, Some(30.0), 7);
    s.meta.num_snapshots = (seconds * s.meta.snapshot_rate_hz).round() as usize;
    simulate(&s).expect("scenario simulates")
}
