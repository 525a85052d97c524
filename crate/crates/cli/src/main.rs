//! `csi-breath`: simulate CSI recordings, estimate breathing rates, and
//! evaluate systems against ground truth.
//!
//! Exit codes: 0 success, 1 estimation failure (every analysable window of
//! some system failed), 2 usage, configuration or I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use csi_breath::dataio::{read_scenario, system_config_to_toml};
use csi_breath::eval::{run_windows, WindowResult};
use csi_breath::{
    compare_systems, list_systems, read_recording, simulate, write_recording, EvalOptions,
    GroundTruthTrack, SampleTensor, SystemConfig, SystemName,
};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(author, version, about = "Breathing-rate estimation from WiFi CSI", long_about = None)]
struct Args {
    /// Worker threads for window-level parallelism (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a simulated recording from a scenario file
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a constant-rate ground-truth track
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Estimate the rate in every window of a recording
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_system)]
        system: SystemName,
        /// Window length in seconds
        #[arg(long, default_value_t = 30.0)]
        window: f64,
        /// Window hop in seconds
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// One JSON record per line instead of a table
        #[arg(long)]
        json: bool,
    },
    /// Compare systems against a ground-truth track
    Evaluate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Comma-separated system names
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_system)]
        systems: Vec<SystemName>,
        /// Per-window report; the CDF table goes to `<out>.cdf.csv`
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        window: f64,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
    /// List the systems and their default parameters
    Systems,
}

fn parse_system(s: &str) -> Result<SystemName, String> {
    s.parse().map_err(|e: csi_breath::Error| e.to_string())
}

fn simulate_cmd(scenario: &Path, out: &Path, truth_out: Option<&Path>) -> anyhow::Result<ExitCode> {
    if !scenario.exists() {
        bail!("scenario not found: {}", scenario.display());
    }
    let s = read_scenario(scenario).with_context(|| format!("reading {}", scenario.display()))?;
    let set = simulate(&s)?;
    write_recording(&set, out).with_context(|| format!("writing {}", out.display()))?;
    let m = set.meta();
    println!(
        "wrote {}: {} snapshots x {} TX x {} RX x {} subcarriers at {} Hz, seed {}",
        out.display(),
        m.num_snapshots,
        m.num_tx,
        m.num_rx,
        m.num_subcarriers,
        m.snapshot_rate_hz,
        s.distortion.rng_seed
    );
    if let Some(path) = truth_out {
        let track = GroundTruthTrack::constant(s.motion.rate_hz, m.duration_s().ceil(), 1.0)?;
        track.write(path).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}: {} rows at {} Hz", path.display(), track.rows().len(), s.motion.rate_hz);
    }
    Ok(ExitCode::SUCCESS)
}

/// True when at least one window passed the gate and every such window failed.
fn all_ungated_failed(results: &[WindowResult]) -> bool {
    let mut ungated = results.iter().filter(|w| !matches!(&w.outcome, Ok(e) if !e.stable));
    let mut any = false;
    let all_failed = ungated.all(|w| {
        any = true;
        w.outcome.is_err()
    });
    any && all_failed
}

fn estimate_cmd(input: &Path, system: SystemName, window: f64, step: f64, json: bool) -> anyhow::Result<ExitCode> {
    let rec = read_recording(input).with_context(|| format!("reading {}", input.display()))?;
    let cfg = SystemConfig::new(system);
    let results = run_windows(&rec, &cfg, window, step)?;
    if results.is_empty() {
        eprintln!("recording is shorter than one {window} s window");
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if !json {
        writeln!(out, "{:>14} {:>10} {:>8} {:>12}", "window_start_s", "rate_bpm", "q", "score")?;
    }
    for w in &results {
        let (rate, q, score) = match &w.outcome {
            Ok(e) => (
                e.rate_bpm().map_or_else(|| json!("gated"), |r| json!(r)),
                e.stability_score,
                e.candidate_score,
            ),
            Err(reason) => {
                eprintln!("window at {:.3} s failed: {reason}", w.start_s);
                (json!("failed"), None, None)
            }
        };
        if json {
            let record = json!({
                "window_start_s": w.start_s,
                "system": system.as_str(),
                "rate_bpm": rate,
                "score": score,
                "q": q,
            });
            writeln!(out, "{record}")?;
        } else {
            let rate = match rate.as_f64() {
                Some(r) => format!("{r:.3}"),
                None => rate.as_str().unwrap_or_default().to_string(),
            };
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            writeln!(out, "{:>14.3} {:>10} {:>8} {:>12}", w.start_s, rate, fmt(q), fmt(score))?;
        }
    }
    Ok(if all_ungated_failed(&results) {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn evaluate_cmd(
    input: &Path,
    truth: &Path,
    systems: &[SystemName],
    out: &Path,
    window: f64,
    step: f64,
) -> anyhow::Result<ExitCode> {
    let rec = read_recording(input).with_context(|| format!("reading {}", input.display()))?;
    let track = GroundTruthTrack::read(truth).with_context(|| format!("reading {}", truth.display()))?;
    let configs: Vec<SystemConfig> = systems.iter().map(|&s| SystemConfig::new(s)).collect();
    let opts = EvalOptions {
        window_s: window,
        step_s: step,
        ..EvalOptions::default()
    };
    let cmp = compare_systems(&rec, &track, &configs, &opts)?;
    std::fs::write(out, cmp.windows_csv()).with_context(|| format!("writing {}", out.display()))?;
    let mut cdf_path = out.as_os_str().to_owned();
    cdf_path.push(".cdf.csv");
    let cdf_path = PathBuf::from(cdf_path);
    std::fs::write(&cdf_path, cmp.cdf_csv()).with_context(|| format!("writing {}", cdf_path.display()))?;
    print!("{}", cmp.text_table());
    eprintln!("wrote {} and {}", out.display(), cdf_path.display());
    let failed = cmp
        .reports
        .iter()
        .any(|r| r.summary.failed > 0 && r.summary.estimated == 0);
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

fn systems_cmd() -> anyhow::Result<ExitCode> {
    for cfg in list_systems() {
        println!("# {}", cfg.name);
        println!("{}", system_config_to_toml(&cfg));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(args: Args) -> anyhow::Result<ExitCode> {
    if let Some(n) = args.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match args.command {
        Command::Simulate {
            scenario,
            out,
            truth_out,
        } => simulate_cmd(&scenario, &out, truth_out.as_deref()),
        Command::Estimate {
            input,
            system,
            window,
            step,
            json,
        } => estimate_cmd(&input, system, window, step, json),
        Command::Evaluate {
            input,
            truth,
            systems,
            out,
            window,
            step,
        } => evaluate_cmd(&input, &truth, &systems, &out, window, step),
        Command::Systems => systems_cmd(),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use csi_breath::{BreathingEstimate, DetectMethod};

    fn window(outcome: Result<BreathingEstimate, String>) -> WindowResult {
        WindowResult {
            index: 0,
            start_s: 0.0,
            outcome,
        }
    }

    #[test]
    fn failure_exit_needs_an_attempted_window() {
        let gated = || window(Ok(BreathingEstimate::rejected(DetectMethod::Psd, 0.3)));
        let failed = || window(Err("series too short".into()));
        assert!(!all_ungated_failed(&[]));
        assert!(!all_ungated_failed(&[gated(), gated()]));
        assert!(all_ungated_failed(&[gated(), failed()]));
        assert!(all_ungated_failed(&[failed()]));
    }
}
