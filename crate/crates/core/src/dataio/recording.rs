//! Binary CSI recordings.
//!
//! Layout (all little-endian):
//!
//! | offset | size | field                                         |
//! |--------|------|-----------------------------------------------|
//! | 0      | 4    | magic `"CSIR"`                                |
//! | 4      | 1    | format version, `1`                           |
//! | 5      | 1    | byte order, `0` = little-endian               |
//! | 6      | 1    | sample layout, `0` = f32 pairs `[t][i][j][m]` |
//! | 7      | 1    | reserved, `0`                                 |
//! | 8      | 16   | `T`, `N_T`, `N_R`, `M` as `u32`               |
//! | 24     | 24   | `f_s`, `Δf`, `f_c` as `f64` (Hz)              |
//! | 48     | …    | `T·N_T·N_R·M` pairs of `f32` (re, im)         |

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::csi::{CsiSampleSet, RadioMeta, SampleTensor};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CSIR";
pub const FORMAT_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 48;
const LITTLE_ENDIAN: u8 = 0;
const LAYOUT_F32_PAIRS: u8 = 0;
const BYTES_PER_SAMPLE: u64 = 8;

/// Encode a sample set; fails if a value does not fit in `f32`.
pub fn encode_recording(set: &CsiSampleSet) -> Result<Vec<u8>> {
    let meta = set.meta();
    let mut out = Vec::with_capacity(HEADER_LEN + set.data().len() * BYTES_PER_SAMPLE as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[FORMAT_VERSION, LITTLE_ENDIAN, LAYOUT_F32_PAIRS, 0]);
    for dim in [meta.num_snapshots, meta.num_tx, meta.num_rx, meta.num_subcarriers] {
        let d = u32::try_from(dim)
            .map_err(|_| Error::validation(format!("dimension {dim} does not fit the header")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    for v in [meta.snapshot_rate_hz, meta.subcarrier_spacing_hz, meta.carrier_freq_hz] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (index, z) in set.data().iter().enumerate() {
        for part in [z.re, z.im] {
            let narrow = part as f32;
            if !narrow.is_finite() {
                return Err(Error::validation(format!(
                    "sample {index} value {part} is not representable as f32"
                )));
            }
            out.extend_from_slice(&narrow.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(b: &[u8], off: usize) -> usize {
    u32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes")) as usize
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

fn f32_at(b: &[u8], off: usize) -> f32 {
    f32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes"))
}

/// Parse the 48-byte header.
pub fn decode_header(bytes: &[u8]) -> Result<RadioMeta> {
    if bytes.len() >= 4 && bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            found: bytes[..4].try_into().expect("4 bytes"),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::validation(format!(
            "file too short for the {HEADER_LEN}-byte header: {} bytes",
            bytes.len()
        )));
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    if bytes[5] != LITTLE_ENDIAN {
        return Err(Error::UnsupportedLayout(format!("byte order code {}", bytes[5])));
    }
    if bytes[6] != LAYOUT_F32_PAIRS {
        return Err(Error::UnsupportedLayout(format!("sample layout code {}", bytes[6])));
    }
    let meta = RadioMeta {
        num_snapshots: u32_at(bytes, 8),
        num_tx: u32_at(bytes, 12),
        num_rx: u32_at(bytes, 16),
        num_subcarriers: u32_at(bytes, 20),
        snapshot_rate_hz: f64_at(bytes, 24),
        subcarrier_spacing_hz: f64_at(bytes, 32),
        carrier_freq_hz: f64_at(bytes, 40),
    };
    meta.validate()?;
    Ok(meta)
}

/// Decode a full recording, checking the payload size against the header.
pub fn decode_recording(bytes: &[u8]) -> Result<CsiSampleSet> {
    let meta = decode_header(bytes)?;
    let expected = [meta.num_snapshots, meta.num_tx, meta.num_rx, meta.num_subcarriers]
        .iter()
        .try_fold(BYTES_PER_SAMPLE, |acc, &d| acc.checked_mul(d as u64))
        .ok_or_else(|| Error::validation("header dimensions overflow the payload size"))?;
    let actual = (bytes.len() - HEADER_LEN) as u64;
    if actual < expected {
        return Err(Error::TruncatedPayload { expected, actual });
    }
    if actual > expected {
        return Err(Error::TrailingBytes { expected, actual });
    }
    let payload = &bytes[HEADER_LEN..];
    let data: Vec<Complex64> = payload
        .chunks_exact(8)
        .map(|c| Complex64::new(f32_at(c, 0) as f64, f32_at(c, 4) as f64))
        .collect();
    CsiSampleSet::new(meta, data)
}

pub fn write_recording(set: &CsiSampleSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_recording(set)?)?;
    Ok(())
}

pub fn read_recording(path: impl AsRef<Path>) -> Result<CsiSampleSet> {
    decode_recording(&fs::read(path)?)
}
