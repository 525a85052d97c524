use csi_breath::dataio::{read_scenario, sliding_windows};
use csi_breath::eval::{run_windows, TruthAlignment, WindowStatus};
use csi_breath::*;

fn long_recording(rate: f64, seconds: usize, snr: Option<f64>, seed: u64) -> CsiSampleSet {
    let mut s = Scenario::single_person(rate, snr, seed);
    s.meta.num_snapshots = (seconds as f64 * s.meta.snapshot_rate_hz).round() as usize;
    simulate(&s).unwrap()
}

#[test]
fn constant_rate_recording_is_tracked() {
    let rec = long_recording(0.25, 42, Some(30.0), 3);
    let truth = GroundTruthTrack::constant(0.25, 45.0, 1.0).unwrap();
    let cfg = SystemConfig::new(SystemName::ComplexbeatCsiDf);
    let report = evaluate(&rec, &truth, &cfg, &EvalOptions::default()).unwrap();
    // 416 snapshots: (416 − 297)/9 + 1 = 14 windows
    assert_eq!(report.rows.len(), 14);
    for row in &report.rows {
        let err = row.abs_error_bpm().expect("every window estimated");
        assert!(err <= 0.6, "window at {} s: {err} bpm", row.start_s);
    }
    assert!(report.summary.fraction_below[0] >= 0.9);
    let last = report.cdf.last().unwrap();
    assert_eq!(last.1, 1.0);
    assert!(report.cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
}

#[test]
fn comparison_table_shape() {
    let rec = long_recording(0.3, 31, Some(30.0), 4);
    let truth = GroundTruthTrack::constant(0.3, 32.0, 1.0).unwrap();
    let cfgs = [
        SystemConfig::new(SystemName::ComplexbeatCsiDf),
        SystemConfig::new(SystemName::Phasebeat),
    ];
    let cmp = compare_systems(&rec, &truth, &cfgs, &EvalOptions::default()).unwrap();
    let csv = cmp.windows_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "window_start_s,truth_bpm,complexbeat-csi-df_bpm,complexbeat-csi-df_abs_err_bpm,phasebeat_bpm,phasebeat_abs_err_bpm"
    );
    // 31 s at 9.9 Hz = 306 snapshots: two windows
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("0.909091,18.000000,"));
    let cdf = cmp.cdf_csv();
    assert!(cdf.starts_with("abs_err_bpm,complexbeat-csi-df,phasebeat\n"));
    assert_eq!(cmp.text_table().lines().count(), 3);
}

#[test]
fn single_window_recording() {
    let rec = long_recording(0.3, 30, Some(30.0), 5);
    assert_eq!(rec.meta().num_snapshots, 297);
    let truth = GroundTruthTrack::constant(0.3, 30.0, 1.0).unwrap();
    let cmp = compare_systems(&rec, &truth, &[SystemConfig::new(SystemName::ComplexbeatCir)], &EvalOptions::default()).unwrap();
    assert_eq!(cmp.windows_csv().lines().count(), 2);
}

#[test]
fn truth_gap_is_reported() {
    let rec = long_recording(0.3, 31, None, 0);
    let truth = GroundTruthTrack::constant(0.3, 20.0, 1.0).unwrap();
    let err = evaluate(&rec, &truth, &SystemConfig::new(SystemName::Phasebeat), &EvalOptions::default()).unwrap_err();
    assert!(matches!(err, Error::TruthGap { .. }), "{err}");
    // center alignment only needs truth up to ~16 s
    let opts = EvalOptions {
        alignment: TruthAlignment::Center,
        ..EvalOptions::default()
    };
    assert!(evaluate(&rec, &truth, &SystemConfig::new(SystemName::Phasebeat), &opts).is_ok());
}

#[test]
fn gated_windows_are_counted_not_scored() {
    let mut s = Scenario::single_person(0.3, Some(-10.0), 8);
    s.meta.num_snapshots = 306;
    let rec = simulate(&s).unwrap();
    let truth = GroundTruthTrack::constant(0.3, 32.0, 1.0).unwrap();
    let r = evaluate(&rec, &truth, &SystemConfig::new(SystemName::ComplexbeatCsi), &EvalOptions::default()).unwrap();
    assert!(r.rows.iter().all(|w| w.status == WindowStatus::Gated));
    assert!(r.summary.no_estimates);
    assert_eq!(r.summary.gated_fraction, 1.0);
    assert!(r.cdf.is_empty());
}

#[test]
fn windows_are_independent() {
    let rec = long_recording(0.35, 33, Some(20.0), 6);
    let cfg = SystemConfig::new(SystemName::PhasebeatBoiPsd);
    let all = run_windows(&rec, &cfg, 30.0, 1.0).unwrap();
    // dropping the first second leaves the remaining windows unchanged
    let tail = csi_breath::dataio::extract_window(&rec, 9, rec.meta().num_snapshots - 9).unwrap();
    let shifted = run_windows(&tail, &cfg, 30.0, 1.0).unwrap();
    assert_eq!(all.len(), shifted.len() + 1);
    for (a, b) in all[1..].iter().zip(&shifted) {
        assert_eq!(a.outcome, b.outcome);
    }
    // the same windows through the plain iterator
    let wins = sliding_windows(&rec, 30.0, 1.0).unwrap();
    for (w, r) in wins.iter().zip(&all) {
        assert_eq!(run_window(w, &cfg).map_err(|e| e.to_string()), r.outcome);
    }
}

#[test]
fn delay_filter_is_transparent_when_bound_covers_all_delays() {
    let x = simulate(&Scenario::single_person(0.33, Some(25.0), 12)).unwrap();
    let csi = run_window(&x, &SystemConfig::new(SystemName::ComplexbeatCsi)).unwrap();
    let mut df = SystemConfig::new(SystemName::ComplexbeatCsiDf);
    // larger than the longest representable delay, 14 bins of about 49 ns
    df.tau_max_s = Some(1e-6);
    let with_df = run_window(&x, &df).unwrap();
    assert_eq!(csi.rate_hz, with_df.rate_hz);
    assert_eq!(csi.candidate, with_df.candidate);
}

#[test]
fn shipped_scenarios_parse_and_simulate() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let s = read_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            simulate(&s).unwrap();
            n += 1;
        }
    }
    assert!(n >= 1);
}
