//! Ground-truth breathing-rate tracks.
//!
//! Stored as comma-separated text with the header `time_s,rate_hz` and one
//! row per measurement time (typically one per second).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub time_s: f64,
    pub rate_hz: f64,
}

/// Rate track with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    rows: Vec<TruthRow>,
}

impl GroundTruthTrack {
    pub fn new(rows: Vec<TruthRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("ground truth track is empty"));
        }
        for (n, r) in rows.iter().enumerate() {
            if !(r.time_s.is_finite() && r.rate_hz.is_finite() && r.rate_hz > 0.0) {
                return Err(Error::Truth {
                    line: n + 2,
                    message: format!("need finite time and positive rate, got {r:?}"),
                });
            }
            if n > 0 && r.time_s <= rows[n - 1].time_s {
                return Err(Error::Truth {
                    line: n + 2,
                    message: format!("time {} s does not increase", r.time_s),
                });
            }
        }
        Ok(Self { rows })
    }

    /// One row per `step_s` from 0 to `duration_s` inclusive, all at `rate_hz`.
    pub fn constant(rate_hz: f64, duration_s: f64, step_s: f64) -> Result<Self> {
        if !(step_s > 0.0 && duration_s >= 0.0) {
            return Err(Error::validation("step must be positive and duration non-negative"));
        }
        let n = (duration_s / step_s + 1e-9).floor() as usize;
        Self::new(
            (0..=n)
                .map(|k| TruthRow {
                    time_s: k as f64 * step_s,
                    rate_hz,
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[TruthRow] {
        &self.rows
    }

    /// Rate of the row nearest to `time_s` (earlier row on exact ties).
    ///
    /// Fails when no row lies within `tolerance_s`.
    pub fn rate_at(&self, time_s: f64, tolerance_s: f64) -> Result<f64> {
        let after = self.rows.partition_point(|r| r.time_s < time_s);
        let before = after.checked_sub(1);
        let pick = match (before, self.rows.get(after)) {
            (Some(b), Some(a)) => {
                if time_s - self.rows[b].time_s <= a.time_s - time_s {
                    b
                } else {
                    after
                }
            }
            (Some(b), None) => b,
            (None, _) => after,
        };
        let row = self.rows[pick];
        if (row.time_s - time_s).abs() > tolerance_s {
            let from_s = before.map_or(f64::NEG_INFINITY, |b| self.rows[b].time_s);
            let to_s = self.rows.get(after).map_or(f64::INFINITY, |r| r.time_s);
            return Err(Error::TruthGap {
                at_s: time_s,
                from_s,
                to_s,
                tolerance_s,
            });
        }
        Ok(row.rate_hz)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    fn from_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Truth {
            line: 1,
            message: e.to_string(),
        })?;
        if header.iter().collect::<Vec<_>>() != ["time_s", "rate_hz"] {
            return Err(Error::Truth {
                line: 1,
                message: format!("expected header \"time_s,rate_hz\", found {header:?}"),
            });
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<TruthRow>() {
            let row = rec.map_err(|e| Error::Truth {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time_s,rate_hz\n");
        for r in &self.rows {
            out.push_str(&format!("{},{}\n", r.time_s, r.rate_hz));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let t = GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,0.25\n1,0.26\n2.5,0.3\n").unwrap();
        assert_eq!(t.rows().len(), 3);
        assert_eq!(GroundTruthTrack::from_csv_str(&t.to_csv_string()).unwrap(), t);
    }

    #[test]
    fn nearest_row_lookup() {
        let t = GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,0.2\n1,0.3\n2,0.4\n").unwrap();
        assert_eq!(t.rate_at(1.4, 1.0).unwrap(), 0.3);
        assert_eq!(t.rate_at(1.6, 1.0).unwrap(), 0.4);
        assert_eq!(t.rate_at(1.5, 1.0).unwrap(), 0.3);
        assert_eq!(t.rate_at(2.9, 1.0).unwrap(), 0.4);
        match t.rate_at(3.5, 1.0) {
            Err(Error::TruthGap { at_s, from_s, .. }) => assert_eq!((at_s, from_s), (3.5, 2.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gap_names_both_sides() {
        let t = GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,0.2\n10,0.3\n").unwrap();
        match t.rate_at(5.0, 1.0) {
            Err(e @ Error::TruthGap { .. }) => {
                let msg = e.to_string();
                assert!(msg.contains("from 0 s to 10 s"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_tracks() {
        assert!(matches!(
            GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,0.2\n0,0.3\n"),
            Err(Error::Truth { line: 3, .. })
        ));
        assert!(GroundTruthTrack::from_csv_str("t,r\n0,0.2\n").is_err());
        assert!(GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,abc\n").is_err());
        assert!(GroundTruthTrack::from_csv_str("time_s,rate_hz\n0,-1\n").is_err());
    }

    #[test]
    fn constant_track() {
        let t = GroundTruthTrack::constant(0.25, 30.0, 1.0).unwrap();
        assert_eq!(t.rows().len(), 31);
        assert_eq!(t.rows()[30].time_s, 30.0);
    }
}
