//! Recompute verification reports from a run directory without re-solving.

use std::fs;
use std::path::Path;

use anyhow::Result;
use cuspflow::solver::{FlowTrajectory, Snapshot};
use cuspflow::{Error, RadialProfile, VerificationReport};

use crate::config::ExperimentConfig;
use crate::run::{member_dir, resolve_params, sha256_hex, verify_member, RunStatus, StatsFile, SCHEMA_VERSION};

#[derive(Debug, Clone)]
pub struct ReplayedMember {
    pub k: u32,
    pub stored: VerificationReport,
    pub replayed: VerificationReport,
}

impl ReplayedMember {
    pub fn matches(&self) -> bool {
        self.stored == self.replayed
    }
}

fn integrity(file: &Path, reason: impl Into<String>) -> Error {
    Error::Integrity { file: file.display().to_string(), reason: reason.into() }
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| integrity(path, format!("cannot read: {e}")))
}

fn read_profile(dir: &Path, file: &str, expected: &str) -> Result<RadialProfile, Error> {
    let path = dir.join(file);
    let bytes = read(&path)?;
    let actual = sha256_hex(&bytes);
    if actual != expected {
        return Err(integrity(&path, format!("sha256 {actual} does not match recorded {expected}")));
    }
    RadialProfile::read_csv(bytes.as_slice()).map_err(|e| integrity(&path, e.to_string()))
}

/// Snapshots of one member, checked against the hashes in its stats file.
pub fn load_member(dir: &Path) -> Result<(StatsFile, FlowTrajectory), Error> {
    let stats_path = dir.join("stats.json");
    let stats: StatsFile =
        serde_json::from_slice(&read(&stats_path)?).map_err(|e| integrity(&stats_path, e.to_string()))?;
    if stats.schema_version != SCHEMA_VERSION {
        return Err(integrity(
            &stats_path,
            format!("schema_version {} is not the supported {SCHEMA_VERSION}", stats.schema_version),
        ));
    }
    if stats.snapshots.is_empty() {
        return Err(integrity(&stats_path, "no snapshots recorded"));
    }
    let mut snapshots = Vec::with_capacity(stats.snapshots.len());
    for e in &stats.snapshots {
        let polar = read_profile(dir, &e.polar_file, &e.polar_sha256)?;
        let cap = match (&e.cap_file, &e.cap_sha256) {
            (Some(f), Some(h)) => Some(read_profile(dir, f, h)?),
            (None, None) => None,
            _ => return Err(integrity(&stats_path, format!("snapshot {} has a cap file without a hash", e.index))),
        };
        snapshots.push(Snapshot { time: polar.time(), polar, cap });
    }
    Ok((stats.clone(), FlowTrajectory { snapshots, stats: stats.solver }))
}

pub fn replay_verify(root: &Path) -> Result<Vec<ReplayedMember>> {
    let config_path = root.join("config.toml");
    let text = String::from_utf8(read(&config_path)?).map_err(|e| integrity(&config_path, e.to_string()))?;
    let cfg = ExperimentConfig::parse(&text, &config_path.display().to_string())?;
    let provenance = sha256_hex(text.as_bytes());

    let mut loaded = Vec::with_capacity(cfg.k_list.len());
    for &k in &cfg.k_list {
        let dir = member_dir(root, k);
        let (stats, traj) = load_member(&dir)?;
        let report_path = dir.join("verification.json");
        let stored: VerificationReport =
            serde_json::from_slice(&read(&report_path)?).map_err(|e| integrity(&report_path, e.to_string()))?;
        loaded.push((k, stats, traj, stored));
    }
    let k_min = *cfg.k_list.iter().min().expect("validated non-empty");
    let smallest = loaded
        .iter()
        .find(|(k, stats, ..)| *k == k_min && stats.status == RunStatus::Complete)
        .map(|(_, _, traj, _)| traj);
    let params = resolve_params(&cfg, smallest);

    loaded
        .into_iter()
        .map(|(k, _, traj, stored)| {
            let replayed = verify_member(k, &traj, cfg.t_end, &params, &provenance)?;
            Ok(ReplayedMember { k, stored, replayed })
        })
        .collect()
}
