//! On-disk formats and windowing.

mod config;
mod recording;
mod truth;
mod windows;

pub use config::{
    parse_scenario, parse_system_config, read_scenario, read_system_config, system_config_to_toml,
};
pub use recording::{
    decode_header, decode_recording, encode_recording, read_recording, write_recording,
    FORMAT_VERSION, HEADER_LEN, MAGIC,
};
pub use truth::{GroundTruthTrack, TruthRow};
pub use windows::{extract_window, reduce_dataset, sliding_windows, SubcarrierHalf, WindowPlan};
