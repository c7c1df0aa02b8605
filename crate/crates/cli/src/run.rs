//! Sweep runner: one trajectory per k, persisted and verified.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cuspflow::diagnostics::{
    convergence_table, curvature_table, diagnostics, length_table, onset_time, reporting_annulus, DiagnosticsRecord,
    SweepTable,
};
use cuspflow::initial_data::{build_initial_profile, verify_initial_constraints};
use cuspflow::solver::{boundary_uncertainty, FlowTrajectory, Snapshot, Solver, SolverStats};
use cuspflow::verify::{check_named_inequalities, fit_origin_constants, NamedParams};
use cuspflow::{ReportEntry, VerificationReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_COMPLETE: &str = "trajectory complete";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    /// The solver stopped early; the snapshots before the failure are kept.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub index: usize,
    pub time: f64,
    pub polar_file: String,
    pub polar_sha256: String,
    pub cap_file: Option<String>,
    pub cap_sha256: Option<String>,
    /// Annulus minus Poincare factor at `s_min`.
    pub bc_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsFile {
    pub schema_version: u32,
    pub k: u32,
    pub status: RunStatus,
    pub failure: Option<String>,
    pub t_end: f64,
    pub t_reached: f64,
    pub solver: SolverStats,
    pub clipped_points: usize,
    pub config_sha256: String,
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone)]
pub struct MemberOutcome {
    pub k: u32,
    pub trajectory: FlowTrajectory,
    pub stats: StatsFile,
    pub report: VerificationReport,
    pub records: Vec<DiagnosticsRecord>,
}

impl MemberOutcome {
    pub fn complete(&self) -> bool {
        self.stats.status == RunStatus::Complete
    }
}

/// Per-k quantities that separate the sequence at `t = 0` and merge later.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignatureRow {
    pub k: u32,
    /// `L_k(0) − ln 2k`
    pub initial_excess: f64,
    pub final_length: f64,
    /// `L_k(0) / L_k(t_end)`
    pub contraction_ratio: f64,
    /// Resolved `sup |K|` over `r ≤ 1 − ε̂`, `t ∈ [1, t_end]`.
    pub late_curvature_sup: Option<f64>,
    pub late_curvature_unresolved: usize,
    pub onset: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Signature {
    pub rows: Vec<SignatureRow>,
}

impl Signature {
    fn spread(values: impl Iterator<Item = f64>) -> Option<f64> {
        let v: Vec<f64> = values.collect();
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (!v.is_empty()).then(|| max / min)
    }

    /// `max_k L_k(t_end) / min_k L_k(t_end)`
    pub fn final_length_spread(&self) -> Option<f64> {
        Self::spread(self.rows.iter().map(|r| r.final_length))
    }

    /// `max_k / min_k` of the late curvature sup; `None` if any k has no
    /// resolved sample.
    pub fn late_curvature_spread(&self) -> Option<f64> {
        let v: Option<Vec<f64>> = self.rows.iter().map(|r| r.late_curvature_sup).collect();
        Self::spread(v?.into_iter())
    }
}

pub fn signature(members: &[(u32, &[DiagnosticsRecord])]) -> Signature {
    let rows = members
        .iter()
        .map(|&(k, recs)| {
            let l0 = recs.first().map_or(f64::NAN, |r| r.length);
            let last = recs.last().map_or(f64::NAN, |r| r.length);
            let late: Vec<&DiagnosticsRecord> = recs.iter().filter(|r| r.t >= 1.0).collect();
            let sup = late
                .iter()
                .filter_map(|r| r.disc_curvature_sup)
                .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
            SignatureRow {
                k,
                initial_excess: l0 - (2.0 * f64::from(k)).ln(),
                final_length: last,
                contraction_ratio: l0 / last,
                late_curvature_sup: sup,
                late_curvature_unresolved: late.iter().map(|r| r.disc_unresolved).max().unwrap_or(0),
                onset: onset_time(recs),
            }
        })
        .collect();
    Signature { rows }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub provenance: String,
    pub params: NamedParams,
    pub members: Vec<MemberOutcome>,
    pub signature: Option<Signature>,
    pub all_pass: bool,
}

pub fn member_dir(root: &Path, k: u32) -> PathBuf {
    root.join(format!("k{k}"))
}

/// Named-inequality parameters: configured constants, or constants fitted on
/// the smallest k and shared by every member.
pub fn resolve_params(cfg: &ExperimentConfig, smallest: Option<&FlowTrajectory>) -> NamedParams {
    let mut params = NamedParams::for_spacing(cfg.initial.h_max);
    let fitted = smallest.map(fit_origin_constants);
    params.alpha_hat = cfg.alpha_hat.or(fitted.map(|f| f.0));
    params.decay_c = cfg.decay_c.or(fitted.map(|f| f.1));
    params
}

/// Initial-data conditions, completion, and the named inequalities.
pub fn verify_member(
    k: u32,
    traj: &FlowTrajectory,
    t_end: f64,
    params: &NamedParams,
    provenance: &str,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(provenance);
    let first = traj.snapshots.first().context("trajectory has no snapshots")?;
    report.extend(verify_initial_constraints(&first.polar, k)?);
    let reached = traj.snapshots.last().map_or(0.0, |s| s.time);
    report.push(ReportEntry::measured(TRAJECTORY_COMPLETE, "all", traj.times(), t_end - reached, 0.0));
    if reached >= t_end {
        report.extend(check_named_inequalities(traj, k, params)?);
    }
    Ok(report)
}

fn write_snapshot(dir: &Path, index: usize, snap: &Snapshot, bc: f64) -> Result<SnapshotEntry> {
    let write = |name: String, profile: &cuspflow::RadialProfile| -> Result<(String, String)> {
        let mut buf = Vec::new();
        profile.write_csv(&mut buf)?;
        fs::write(dir.join(&name), &buf).with_context(|| format!("writing {name}"))?;
        Ok((format!("snapshots/{name}"), sha256_hex(&buf)))
    };
    let (polar_file, polar_sha256) = write(format!("snap_{index:03}_polar.csv"), &snap.polar)?;
    let cap = snap.cap.as_ref().map(|c| write(format!("snap_{index:03}_cap.csv"), c)).transpose()?;
    let (cap_file, cap_sha256) = cap.map_or((None, None), |(f, h)| (Some(f), Some(h)));
    Ok(SnapshotEntry { index, time: snap.time, polar_file, polar_sha256, cap_file, cap_sha256, bc_uncertainty: bc })
}

struct Solved {
    k: u32,
    trajectory: FlowTrajectory,
    failure: Option<String>,
    clipped_points: usize,
}

fn solve(cfg: &ExperimentConfig, k: u32) -> Result<Solved> {
    let init = build_initial_profile(&cfg.spec_for(k))?;
    let (solver, state) = Solver::for_initial(&init, cfg.solver.clone(), cfg.boundary)?;
    let (trajectory, failure) = match solver.evolve(state, cfg.t_end, &cfg.snapshot_times) {
        Ok(t) => (t, None),
        Err(f) => (f.partial.clone(), Some(f.to_string())),
    };
    Ok(Solved { k, trajectory, failure, clipped_points: init.clipped_points })
}

fn persist(cfg: &ExperimentConfig, root: &Path, solved: &Solved, provenance: &str) -> Result<StatsFile> {
    let dir = member_dir(root, solved.k);
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps).with_context(|| format!("creating {}", snaps.display()))?;
    let bc = boundary_uncertainty(solved.k, cfg.initial.s_min)?;
    let entries = solved
        .trajectory
        .snapshots
        .iter()
        .enumerate()
        .map(|(i, s)| write_snapshot(&snaps, i, s, bc))
        .collect::<Result<Vec<_>>>()?;
    let stats = StatsFile {
        schema_version: SCHEMA_VERSION,
        k: solved.k,
        status: if solved.failure.is_some() { RunStatus::Failed } else { RunStatus::Complete },
        failure: solved.failure.clone(),
        t_end: cfg.t_end,
        t_reached: solved.trajectory.snapshots.last().map_or(0.0, |s| s.time),
        solver: solved.trajectory.stats.clone(),
        clipped_points: solved.clipped_points,
        config_sha256: provenance.to_string(),
        snapshots: entries,
    };
    fs::write(dir.join("stats.json"), serde_json::to_string_pretty(&stats)? + "\n")?;
    Ok(stats)
}

fn write_table(path: &Path, table: &SweepTable) -> Result<()> {
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

/// Run the sweep described by `cfg` (whose source text is `config_text`)
/// into `cfg.output_dir`.
pub fn run(cfg: &ExperimentConfig, config_text: &str) -> Result<RunOutcome> {
    let root = cfg.output_dir.clone();
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;
    fs::write(root.join("config.toml"), config_text)?;
    let provenance = sha256_hex(config_text.as_bytes());

    let solve_all = || cfg.k_list.par_iter().map(|&k| solve(cfg, k)).collect::<Result<Vec<_>>>();
    let solved = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(solve_all)?,
        None => solve_all()?,
    };

    let smallest = solved
        .iter()
        .filter(|s| s.failure.is_none())
        .min_by_key(|s| s.k)
        .filter(|s| s.k == *cfg.k_list.iter().min().expect("k_list is non-empty"));
    let params = resolve_params(cfg, smallest.map(|s| &s.trajectory));

    let mut members = Vec::with_capacity(solved.len());
    for s in solved {
        let stats = persist(cfg, &root, &s, &provenance)?;
        let report = verify_member(s.k, &s.trajectory, cfg.t_end, &params, &provenance)?;
        let dir = member_dir(&root, s.k);
        fs::write(dir.join("verification.json"), serde_json::to_string_pretty(&report)? + "\n")?;
        let records = diagnostics(&s.trajectory, cfg.eps_hat)?;
        members.push(MemberOutcome { k: s.k, trajectory: s.trajectory, stats, report, records });
    }

    let complete = members.iter().all(MemberOutcome::complete);
    let signature = if complete {
        let recs: Vec<(u32, Vec<DiagnosticsRecord>)> = members.iter().map(|m| (m.k, m.records.clone())).collect();
        write_table(&root.join("lengths.csv"), &length_table(&recs)?)?;
        write_table(&root.join("curvature_sups.csv"), &curvature_table(&recs)?)?;
        let trajs: Vec<(u32, &FlowTrajectory)> = members.iter().map(|m| (m.k, &m.trajectory)).collect();
        write_table(&root.join("convergence.csv"), &convergence_table(&trajs, reporting_annulus(cfg.eps_hat)?)?)?;
        Some(signature(&members.iter().map(|m| (m.k, m.records.as_slice())).collect::<Vec<_>>()))
    } else {
        None
    };

    let all_pass = members.iter().all(|m| m.report.all_pass());
    let outcome = RunOutcome { dir: root.clone(), provenance, params, members, signature, all_pass };
    fs::write(root.join("summary.txt"), render_summary(&outcome))?;
    Ok(outcome)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

pub fn render_summary(o: &RunOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config sha256: {}", o.provenance);
    let _ = writeln!(
        s,
        "named tolerance {:.4}, alpha_hat {}, decay_c {}",
        o.params.tolerance,
        opt(o.params.alpha_hat),
        opt(o.params.decay_c)
    );
    let _ = writeln!(s, "overall: {}", if o.all_pass { "PASS" } else { "FAIL" });
    for m in &o.members {
        let failed: Vec<&str> = m.report.failures().map(|e| e.name.as_str()).collect();
        let _ = writeln!(
            s,
            "\nk = {}: {:?}, t reached {}, {} steps ({} rejected), {} clipped blend points",
            m.k, m.stats.status, m.stats.t_reached, m.stats.solver.steps, m.stats.solver.rejected_steps, m.stats.clipped_points
        );
        if let Some(f) = &m.stats.failure {
            let _ = writeln!(s, "solver failure: {f}");
        }
        let _ = writeln!(s, "failing entries: {}", if failed.is_empty() { "none".into() } else { failed.join(", ") });
        s.push_str(&m.report.render_table());
    }
    if let Some(sig) = &o.signature {
        let _ = writeln!(s, "\n{:>4} {:>14} {:>12} {:>10} {:>14} {:>10} {:>8}", "k", "L(0)-ln2k", "L(t_end)", "ratio", "late sup|K|", "unresolved", "onset");
        for r in &sig.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>14.6} {:>12.6} {:>10.4} {:>14} {:>10} {:>8}",
                r.k,
                r.initial_excess,
                r.final_length,
                r.contraction_ratio,
                opt(r.late_curvature_sup),
                r.late_curvature_unresolved,
                opt(r.onset)
            );
        }
        let _ = writeln!(s, "max/min L(t_end): {}", opt(sig.final_length_spread()));
        let _ = writeln!(s, "max/min late sup|K|: {}", opt(sig.late_curvature_spread()));
    } else {
        let _ = writeln!(s, "\nsweep tables skipped: not every trajectory completed");
    }
    s
}
