//! Result files: per-iteration CSV plus a JSON sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decentral::{OutputIterate, RunRecord};
use crate::error::{Error, Result};
use crate::theory::TheoryReport;

use super::config::RunConfig;

pub const RECORDS_FILE: &str = "records.csv";
pub const SIDECAR_FILE: &str = "run.json";
pub const PARAMS_FILE: &str = "params.json";

pub const CSV_HEADER: [&str; 8] = [
    "k",
    "agent",
    "reward",
    "mean_reward",
    "consensus_err",
    "tracking_resid",
    "u_norm",
    "clamps",
];

/// Creates `dir` and proves a file can be written there.
pub fn preflight(dir: &Path) -> Result<()> {
    let unwritable = |source| Error::Unwritable {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(".write-probe");
    fs::File::create(&probe)
        .and_then(|mut f| f.write_all(b"ok"))
        .map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)?;
    Ok(())
}

/// One row per `(k, agent)`; floats in shortest round-trip form, LF endings.
pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for (agent, reward) in r.rewards.iter().enumerate() {
            w.write_record([
                r.k.to_string(),
                agent.to_string(),
                reward.to_string(),
                r.mean_reward.to_string(),
                r.consensus_err.to_string(),
                r.tracking_resid.to_string(),
                r.u_norm.to_string(),
                r.clamps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads back the swarm-mean reward per iteration from a records file.
pub fn read_mean_rewards(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    let mut last_k = None;
    for row in rdr.records() {
        let row = row?;
        let k: usize = row[0].parse().map_err(|e: std::num::ParseIntError| bad_csv(path, e))?;
        if last_k != Some(k) {
            out.push(
                row[3]
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| bad_csv(path, e))?,
            );
            last_k = Some(k);
        }
    }
    Ok(out)
}

fn bad_csv(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::BadValue {
        key: path.display().to_string(),
        value: String::new(),
        detail: e.to_string(),
    }
}

/// Everything needed to reconstruct a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub seed: u64,
    pub theory: TheoryReport,
    pub iterations_completed: usize,
    pub failure: Option<String>,
}

/// Final and uniformly drawn iterates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub output_iterate: Option<OutputIterate>,
    pub last_iterate: Vec<Vec<f64>>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_sidecar(dir: &Path) -> Result<Sidecar> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(SIDECAR_FILE))?)?)
}

pub fn records_path(dir: &Path) -> PathBuf {
    dir.join(RECORDS_FILE)
}
