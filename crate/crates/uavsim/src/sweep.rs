//! Parameter sweeps over UE count or UAV count, and CSV output.

use rayon::prelude::*;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;
use uavsim_core::config::ScenarioConfig;
use uavsim_core::metrics::{MetricsReport, METRICS};
use uavsim_core::sim;
use uavsim_core::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Ue,
    Uav,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("run {axis}={value} seed={seed} aborted: {source}")]
    Run {
        axis: &'static str,
        value: u32,
        seed: u64,
        source: uavsim_core::Error,
    },
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: u32,
    pub seed: u64,
    pub report: MetricsReport,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Ue => "ue",
            Axis::Uav => "uav",
        }
    }

    /// Sweep points as `(axis value, ue count, uav count)`.
    pub fn points(self, cfg: &ScenarioConfig) -> Vec<(u32, u32, u32)> {
        match self {
            Axis::Ue => cfg.sweep_e.iter().map(|&e| (e, e, cfg.uavs_u.hi)).collect(),
            Axis::Uav => (cfg.uavs_u.lo..=cfg.uavs_u.hi).map(|u| (u, cfg.ues_e.lo, u)).collect(),
        }
    }
}

pub fn run_sweep(cfg: &ScenarioConfig, axis: Axis, seeds: u32, keep_traces: bool) -> Result<SweepResult, SweepError> {
    let jobs: Vec<_> = axis
        .points(cfg)
        .into_iter()
        .flat_map(|p| (1..=u64::from(seeds)).map(move |s| (p, s)))
        .collect();
    let mut rows = jobs
        .into_par_iter()
        .map(|((value, e, u), seed)| {
            let out = sim::run(cfg, e, u, seed).map_err(|source| SweepError::Run {
                axis: axis.name(),
                value,
                seed,
                source,
            })?;
            Ok(SweepRow {
                axis_value: value,
                seed,
                report: out.report,
                trace: keep_traces.then_some(out.trace),
            })
        })
        .collect::<Result<Vec<_>, SweepError>>()?;
    rows.sort_by_key(|r| (r.axis_value, r.seed));
    Ok(SweepResult { axis, rows })
}

fn csv_text(result: &SweepResult, get: fn(&MetricsReport) -> f64) -> String {
    let mut s = format!("{},seed,value\n", result.axis.name());
    for r in &result.rows {
        s.push_str(&format!("{},{},{}\n", r.axis_value, r.seed, get(&r.report)));
    }
    s
}

fn write_file(path: &Path, text: &str) -> Result<(), SweepError> {
    let io_err = |source| SweepError::Io { path: path.to_path_buf(), source };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(text.as_bytes()).map_err(io_err)?;
    f.sync_all().map_err(io_err)
}

/// Writes one `<metric>.csv` per metric, plus traces when kept.
/// Files already written are removed if any write fails.
pub fn write_outputs(dir: &Path, result: &SweepResult) -> Result<Vec<PathBuf>, SweepError> {
    fs::create_dir_all(dir).map_err(|source| SweepError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    let mut outcome = Ok(());
    for (name, get) in METRICS {
        let path = dir.join(format!("{name}.csv"));
        outcome = write_file(&path, &csv_text(result, get));
        if outcome.is_err() {
            break;
        }
        written.push(path);
    }
    if outcome.is_ok() {
        for r in &result.rows {
            let Some(trace) = &r.trace else { continue };
            let path = dir.join(format!("trace_{}{}_s{}.txt", result.axis.name(), r.axis_value, r.seed));
            outcome = write_file(&path, &crate::trace::to_string(trace));
            if outcome.is_err() {
                break;
            }
            written.push(path);
        }
    }
    match outcome {
        Ok(()) => Ok(written),
        Err(e) => {
            remove_all(&written);
            Err(e)
        }
    }
}

pub fn remove_all(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}
