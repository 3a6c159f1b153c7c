//! Configuration, execution and persistence of experiment runs.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decentral::{RunOutput, Swarm};
use crate::error::{Error, Result};
use crate::stats::final_window_mean;

pub use config::{parse_config, parse_kv, PolicyChoice, RunConfig, ScheduleKind, TheoryInputs, KEYS};
pub use output::{preflight, read_mean_rewards, read_sidecar, write_records, ParamsFile, Sidecar};

/// Iterations averaged for a run's headline reward.
pub const FINAL_WINDOW: usize = 500;

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub dir: PathBuf,
    pub iterations: usize,
    /// Mean of the swarm-mean reward over the last [`FINAL_WINDOW`] iterations.
    pub final_mean_reward: f64,
    pub failure: Option<String>,
}

/// Runs the configuration without touching the filesystem.
pub fn simulate(cfg: &RunConfig, seed: u64) -> Result<RunOutput> {
    let mut swarm = Swarm::new(
        cfg.build_env()?,
        cfg.build_policy(),
        cfg.mixing()?,
        cfg.train_config(seed),
    )?;
    swarm.run(cfg.episodes)
}

/// Output directory of one seed: `out` itself for single-seed configs,
/// `out/seed-<s>` otherwise.
pub fn seed_dir(cfg: &RunConfig, seed: u64) -> PathBuf {
    if cfg.seeds.len() == 1 {
        cfg.out.clone()
    } else {
        cfg.out.join(format!("seed-{seed}"))
    }
}

/// Runs one seed and writes `records.csv`, `run.json` and `params.json`.
/// A run that aborts still writes its partial records and reports the fault
/// in the summary.
pub fn run_seed(cfg: &RunConfig, seed: u64) -> Result<RunSummary> {
    let dir = seed_dir(cfg, seed);
    preflight(&dir)?;
    let theory = cfg.theory_report()?;
    let out = simulate(cfg, seed)?;
    let file = fs::File::create(output::records_path(&dir))?;
    write_records(std::io::BufWriter::new(file), &out.records)?;
    let failure = out.failure.as_ref().map(ToString::to_string);
    output::write_json(
        &dir.join(output::SIDECAR_FILE),
        &Sidecar {
            config: cfg.clone(),
            seed,
            theory,
            iterations_completed: out.records.len(),
            failure: failure.clone(),
        },
    )?;
    output::write_json(
        &dir.join(output::PARAMS_FILE),
        &ParamsFile {
            output_iterate: out.output,
            last_iterate: out.last_iterate,
        },
    )?;
    let rewards: Vec<f64> = out.records.iter().map(|r| r.mean_reward).collect();
    Ok(RunSummary {
        seed,
        dir,
        iterations: rewards.len(),
        final_mean_reward: if rewards.is_empty() {
            f64::NAN
        } else {
            final_window_mean(&rewards, FINAL_WINDOW)
        },
        failure,
    })
}

/// Runs every configured seed in order.
pub fn execute(cfg: &RunConfig) -> Result<Vec<RunSummary>> {
    preflight(&cfg.out)?;
    cfg.seeds.iter().map(|&s| run_seed(cfg, s)).collect()
}

/// Directory-safe rendering of a sweep value.
fn slug(value: &str) -> String {
    value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: String,
    pub runs: Vec<RunSummary>,
}

/// One run per value of `axis`, each under `out/<axis>-<value>`, plus
/// `out/summary.csv` with the final-window mean reward of every run.
pub fn sweep(base: &RunConfig, axis: &str, values: &[String]) -> Result<Vec<SweepPoint>> {
    if !config::is_known_key(axis) {
        return Err(Error::UnknownKey(axis.to_string()));
    }
    if axis == "out" {
        return Err(Error::OutOfRange {
            key: "sweep axis".into(),
            detail: "cannot sweep over the output directory".into(),
        });
    }
    if values.is_empty() {
        return Err(Error::OutOfRange {
            key: "sweep values".into(),
            detail: "need at least one value".into(),
        });
    }
    let configs = values
        .iter()
        .map(|v| {
            let mut pairs: Vec<(String, String)> = base
                .to_pairs()
                .into_iter()
                .filter(|(k, _)| k != axis && k != "out")
                .collect();
            pairs.push((axis.to_string(), v.clone()));
            let dir = base.out.join(format!("{axis}-{}", slug(v)));
            pairs.push(("out".into(), dir.display().to_string()));
            RunConfig::from_pairs(&pairs.into_iter().collect())
        })
        .collect::<Result<Vec<_>>>()?;
    preflight(&base.out)?;
    let mut points = Vec::with_capacity(values.len());
    for (value, cfg) in values.iter().zip(&configs) {
        points.push(SweepPoint {
            value: value.clone(),
            runs: execute(cfg)?,
        });
    }
    write_summary(&base.out.join(SUMMARY_FILE), axis, &points)?;
    Ok(points)
}

fn write_summary(path: &Path, axis: &str, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record([axis, "seed", "final_mean_reward", "iterations", "status"])?;
    for p in points {
        for r in &p.runs {
            w.write_record([
                p.value.clone(),
                r.seed.to_string(),
                r.final_mean_reward.to_string(),
                r.iterations.to_string(),
                r.failure.clone().unwrap_or_else(|| "ok".into()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
