//! Sliding-window evaluation against a ground-truth track.
//!
//! Errors are reported in breaths per minute. Windows rejected by the
//! stability gate are counted but excluded from the error statistics;
//! windows whose estimator failed count as misses in the threshold
//! fractions and are excluded from the CDF and median.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csi::{CsiSampleSet, SampleTensor};
use crate::dataio::{extract_window, GroundTruthTrack, WindowPlan};
use crate::detect::BreathingEstimate;
use crate::error::{Error, Result};
use crate::pipeline::{run_window, SystemConfig, SystemName};

/// Error thresholds (bpm) reported in every summary.
pub const THRESHOLDS_BPM: [f64; 2] = [0.5, 1.2];

/// Which instant of a window its truth value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruthAlignment {
    End,
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub window_s: f64,
    pub step_s: f64,
    pub alignment: TruthAlignment,
    /// Largest allowed distance between a window's truth instant and the nearest truth row.
    pub truth_tolerance_s: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            window_s: 30.0,
            step_s: 1.0,
            alignment: TruthAlignment::End,
            truth_tolerance_s: 1.0,
        }
    }
}

/// One analysed window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowResult {
    pub index: usize,
    pub start_s: f64,
    pub outcome: Result<BreathingEstimate, String>,
}

/// Run `cfg` over every window of `recording`, in parallel, in window order.
///
/// Estimation failures are kept per window; any other error aborts the run.
pub fn run_windows(
    recording: &CsiSampleSet,
    cfg: &SystemConfig,
    window_s: f64,
    step_s: f64,
) -> Result<Vec<WindowResult>> {
    let meta = recording.meta();
    let fs = meta.snapshot_rate_hz;
    let plan = WindowPlan::new(meta.num_snapshots, fs, window_s, step_s)?;
    (0..plan.count)
        .into_par_iter()
        .map(|k| {
            let start = plan.start(k);
            let win = extract_window(recording, start, plan.len)?;
            let outcome = match run_window(&win, cfg) {
                Ok(e) => Ok(e),
                Err(e) if e.is_estimation_failure() => Err(e.to_string()),
                Err(e) => return Err(e),
            };
            Ok(WindowResult {
                index: k,
                start_s: start as f64 / fs,
                outcome,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum WindowStatus {
    Estimated { estimate_bpm: f64, abs_error_bpm: f64 },
    Gated,
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub start_s: f64,
    pub truth_bpm: f64,
    pub stability_score: Option<f64>,
    #[serde(flatten)]
    pub status: WindowStatus,
}

impl WindowRow {
    pub fn abs_error_bpm(&self) -> Option<f64> {
        match self.status {
            WindowStatus::Estimated { abs_error_bpm, .. } => Some(abs_error_bpm),
            _ => None,
        }
    }

    pub fn estimate_bpm(&self) -> Option<f64> {
        match self.status {
            WindowStatus::Estimated { estimate_bpm, .. } => Some(estimate_bpm),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub windows: usize,
    pub estimated: usize,
    pub gated: usize,
    pub failed: usize,
    /// Fraction of ungated windows with error strictly below each of [`THRESHOLDS_BPM`].
    pub fraction_below: [f64; 2],
    pub median_error_bpm: Option<f64>,
    pub gated_fraction: f64,
    /// Set when no window produced an estimate.
    pub no_estimates: bool,
}

/// Per-window rows, summary and error CDF of one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub system: SystemName,
    pub rows: Vec<WindowRow>,
    pub summary: Summary,
    /// `(error_bpm, fraction of estimated windows with error ≤ error_bpm)`.
    pub cdf: Vec<(f64, f64)>,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Empirical CDF at each distinct error value.
pub fn error_cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut cdf: Vec<(f64, f64)> = Vec::new();
    for (k, &e) in sorted.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match cdf.last_mut() {
            Some(last) if last.0 == e => last.1 = frac,
            _ => cdf.push((e, frac)),
        }
    }
    cdf
}

fn summarize(system: SystemName, rows: Vec<WindowRow>) -> ErrorReport {
    let windows = rows.len();
    let mut errors: Vec<f64> = rows.iter().filter_map(WindowRow::abs_error_bpm).collect();
    errors.sort_by(f64::total_cmp);
    let gated = rows.iter().filter(|r| r.status == WindowStatus::Gated).count();
    let estimated = errors.len();
    let failed = windows - gated - estimated;
    let ungated = windows - gated;
    let fraction_below = THRESHOLDS_BPM.map(|th| {
        if ungated == 0 {
            0.0
        } else {
            errors.iter().filter(|&&e| e < th).count() as f64 / ungated as f64
        }
    });
    let summary = Summary {
        windows,
        estimated,
        gated,
        failed,
        fraction_below,
        median_error_bpm: median(&errors),
        gated_fraction: if windows == 0 { 0.0 } else { gated as f64 / windows as f64 },
        no_estimates: estimated == 0,
    };
    ErrorReport {
        system,
        cdf: error_cdf(&errors),
        rows,
        summary,
    }
}

fn truth_times(
    recording: &CsiSampleSet,
    truth: &GroundTruthTrack,
    opts: &EvalOptions,
) -> Result<Vec<(f64, f64)>> {
    let meta = recording.meta();
    let fs = meta.snapshot_rate_hz;
    let plan = WindowPlan::new(meta.num_snapshots, fs, opts.window_s, opts.step_s)?;
    (0..plan.count)
        .map(|k| {
            let start = plan.start(k) as f64 / fs;
            let at = match opts.alignment {
                TruthAlignment::End => start + plan.len as f64 / fs,
                TruthAlignment::Center => start + 0.5 * plan.len as f64 / fs,
            };
            Ok((start, 60.0 * truth.rate_at(at, opts.truth_tolerance_s)?))
        })
        .collect()
}

/// Evaluate one system over all windows of a recording.
pub fn evaluate(
    recording: &CsiSampleSet,
    truth: &GroundTruthTrack,
    cfg: &SystemConfig,
    opts: &EvalOptions,
) -> Result<ErrorReport> {
    // truth coverage is checked before any estimation work
    let truths = truth_times(recording, truth, opts)?;
    let results = run_windows(recording, cfg, opts.window_s, opts.step_s)?;
    let rows = results
        .into_iter()
        .zip(truths)
        .map(|(w, (start_s, truth_bpm))| {
            debug_assert_eq!(w.start_s, start_s);
            let (status, q) = match w.outcome {
                Ok(est) => {
                    let q = est.stability_score;
                    let status = match est.rate_bpm() {
                        Some(bpm) => WindowStatus::Estimated {
                            estimate_bpm: bpm,
                            abs_error_bpm: (bpm - truth_bpm).abs(),
                        },
                        None => WindowStatus::Gated,
                    };
                    (status, q)
                }
                Err(reason) => (WindowStatus::Failed { reason }, None),
            };
            WindowRow {
                start_s,
                truth_bpm,
                stability_score: q,
                status,
            }
        })
        .collect();
    Ok(summarize(cfg.name, rows))
}

/// Reports of several systems over the same windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub reports: Vec<ErrorReport>,
}

pub fn compare_systems(
    recording: &CsiSampleSet,
    truth: &GroundTruthTrack,
    configs: &[SystemConfig],
    opts: &EvalOptions,
) -> Result<Comparison> {
    if configs.is_empty() {
        return Err(Error::validation("no systems to compare"));
    }
    let reports = configs
        .iter()
        .map(|cfg| evaluate(recording, truth, cfg, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { reports })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl Comparison {
    /// Header `window_start_s,truth_bpm,<sys>_bpm,<sys>_abs_err_bpm,...`; gated
    /// windows carry `gated` and failed windows `failed` in the estimate column.
    pub fn windows_csv(&self) -> String {
        let mut out = String::from("window_start_s,truth_bpm");
        for r in &self.reports {
            write!(out, ",{0}_bpm,{0}_abs_err_bpm", r.system).unwrap();
        }
        out.push('\n');
        let n = self.reports[0].rows.len();
        for k in 0..n {
            let first = &self.reports[0].rows[k];
            write!(out, "{:.6},{:.6}", first.start_s, first.truth_bpm).unwrap();
            for r in &self.reports {
                let row = &r.rows[k];
                let est = match row.status {
                    WindowStatus::Gated => "gated".to_string(),
                    WindowStatus::Failed { .. } => "failed".to_string(),
                    WindowStatus::Estimated { estimate_bpm, .. } => format!("{estimate_bpm:.6}"),
                };
                write!(out, ",{est},{}", cell(row.abs_error_bpm())).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Header `abs_err_bpm,<sys>,...`: each system's CDF evaluated on the union
    /// of all error values.
    pub fn cdf_csv(&self) -> String {
        let mut grid: Vec<f64> = self
            .reports
            .iter()
            .flat_map(|r| r.cdf.iter().map(|&(e, _)| e))
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut out = String::from("abs_err_bpm");
        for r in &self.reports {
            write!(out, ",{}", r.system).unwrap();
        }
        out.push('\n');
        for e in grid {
            write!(out, "{e:.6}").unwrap();
            for r in &self.reports {
                let v = if r.cdf.is_empty() {
                    None
                } else {
                    let k = r.cdf.partition_point(|&(x, _)| x <= e);
                    Some(if k == 0 { 0.0 } else { r.cdf[k - 1].1 })
                };
                write!(out, ",{}", cell(v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Human-readable summary, one line per system.
    pub fn text_table(&self) -> String {
        let mut out = format!(
            "{:<20} {:>7} {:>9} {:>6} {:>6} {:>10} {:>10} {:>11}\n",
            "system", "windows", "estimated", "gated", "failed", "<0.5 bpm", "<1.2 bpm", "median bpm"
        );
        for r in &self.reports {
            let s = &r.summary;
            writeln!(
                out,
                "{:<20} {:>7} {:>9} {:>6} {:>6} {:>10.3} {:>10.3} {:>11}{}",
                r.system.to_string(),
                s.windows,
                s.estimated,
                s.gated,
                s.failed,
                s.fraction_below[0],
                s.fraction_below[1],
                s.median_error_bpm.map_or("-".to_string(), |m| format!("{m:.3}")),
                if s.no_estimates { "  (no estimates)" } else { "" }
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(truth: f64, status: WindowStatus) -> WindowRow {
        WindowRow {
            start_s: 0.0,
            truth_bpm: truth,
            stability_score: None,
            status,
        }
    }

    fn est(e: f64, err: f64) -> WindowStatus {
        WindowStatus::Estimated {
            estimate_bpm: e,
            abs_error_bpm: err,
        }
    }

    #[test]
    fn cdf_is_monotone_step() {
        let c = error_cdf(&[0.3, 0.1, 0.3, 1.0]);
        assert_eq!(c, vec![(0.1, 0.25), (0.3, 0.75), (1.0, 1.0)]);
        assert_eq!(error_cdf(&[0.0, 0.0, 0.0]), vec![(0.0, 1.0)]);
        assert!(error_cdf(&[]).is_empty());
    }

    #[test]
    fn perfect_estimates() {
        let r = summarize(SystemName::Phasebeat, vec![row(15.0, est(15.0, 0.0)); 4]);
        assert_eq!(r.cdf, vec![(0.0, 1.0)]);
        assert_eq!(r.summary.fraction_below, [1.0, 1.0]);
        assert_eq!(r.summary.median_error_bpm, Some(0.0));
    }

    #[test]
    fn all_gated() {
        let r = summarize(SystemName::Phasebeat, vec![row(15.0, WindowStatus::Gated); 3]);
        assert!(r.cdf.is_empty());
        assert_eq!(r.summary.gated_fraction, 1.0);
        assert!(r.summary.no_estimates);
        assert_eq!(r.summary.median_error_bpm, None);
    }

    #[test]
    fn failures_count_as_misses() {
        let rows = vec![
            row(15.0, est(15.2, 0.2)),
            row(15.0, est(16.0, 1.0)),
            row(15.0, WindowStatus::Failed { reason: "x".into() }),
            row(15.0, WindowStatus::Gated),
        ];
        let s = summarize(SystemName::Phasebeat, rows).summary;
        assert_eq!((s.estimated, s.gated, s.failed), (2, 1, 1));
        assert!((s.fraction_below[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.fraction_below[1] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.median_error_bpm, Some(0.6));
        assert_eq!(s.gated_fraction, 0.25);
    }
}
