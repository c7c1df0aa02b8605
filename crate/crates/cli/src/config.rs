//! Sweep configuration files.
//!
//! ```toml
//! [sweep]
//! k_list = [10, 15, 20, 30]
//! t_end = 1.5
//! output_dir = "runs/reference"
//!
//! [initial]
//! blend = "smoothstep"
//! s_min = 0.05
//!
//! [solver]
//! scheme = "backward_euler"
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use cuspflow::initial_data::{Blend, InitialDataSpec, MIN_K};
use cuspflow::solver::{BoundaryTag, Scheme, SolverConfig};
use cuspflow::verify::REQUIRED_TIMES;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

/// Snapshot times used when the config does not list any.
pub const DEFAULT_TIMES: [f64; 11] = [0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.2, 1.25, 1.5];

#[derive(Debug, Error)]
#[error("{file}:{line}: {message}")]
pub struct ConfigError {
    pub file: String,
    /// 1-based line the problem is anchored to.
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sweep: RawSweep,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    report: RawReport,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    k_list: Spanned<Vec<u32>>,
    t_end: Spanned<f64>,
    snapshot_times: Option<Spanned<Vec<f64>>>,
    output_dir: PathBuf,
    threads: Option<Spanned<usize>>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    blend: Option<String>,
    s_min: Option<f64>,
    s_switch: Option<f64>,
    n_points: Option<usize>,
    h_max: Option<f64>,
    grading: Option<f64>,
    cap_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    scheme: Option<String>,
    boundary: Option<String>,
    dt_init: Option<f64>,
    dt_max: Option<f64>,
    du_max: Option<f64>,
    newton_tol: Option<f64>,
    newton_max_iter: Option<usize>,
    dt_force: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReport {
    eps_hat: Option<f64>,
    alpha_hat: Option<f64>,
    decay_c: Option<f64>,
}

/// Validated sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub k_list: Vec<u32>,
    pub t_end: f64,
    /// Sorted, deduplicated, always containing the required times up to
    /// `t_end` and `t_end` itself.
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    /// Worker threads; `None` lets the runner decide.
    pub threads: Option<usize>,
    /// Reserved; the numerics are deterministic.
    pub seed: u64,
    pub initial: InitialDataSpec,
    pub solver: SolverConfig,
    pub boundary: BoundaryTag,
    pub eps_hat: f64,
    pub alpha_hat: Option<f64>,
    pub decay_c: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of a `[table]` header, or 1 when the table is absent.
fn table_line(text: &str, table: &str) -> usize {
    let header = format!("[{table}]");
    text.lines().position(|l| l.trim() == header).map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<(Self, String), ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { file: file.clone(), line: 1, message: format!("cannot read: {e}") })?;
        let cfg = Self::parse(&text, &file)?;
        Ok((cfg, text))
    }

    /// Parse and validate; `file` only labels error messages. Relative
    /// output directories are kept as written.
    pub fn parse(text: &str, file: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, message: String| ConfigError { file: file.to_string(), line, message };
        let at = |span: Range<usize>| line_of(text, span.start);
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| at(s));
            err(line, e.message().to_string())
        })?;

        let sweep = &raw.sweep;
        let k_line = at(sweep.k_list.span());
        let k_list = sweep.k_list.get_ref().clone();
        if k_list.is_empty() {
            return Err(err(k_line, "k_list must not be empty".into()));
        }
        if let Some(&k) = k_list.iter().find(|&&k| k < MIN_K) {
            return Err(err(k_line, format!("k = {k} is not allowed: every k must satisfy k >= {MIN_K}")));
        }
        let mut sorted = k_list.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k_list.len() {
            return Err(err(k_line, "k_list has repeated entries".into()));
        }

        let t_end = *sweep.t_end.get_ref();
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(err(at(sweep.t_end.span()), format!("t_end = {t_end} must be finite and >= 0")));
        }
        let mut times: Vec<f64> = match &sweep.snapshot_times {
            Some(ts) => {
                let line = at(ts.span());
                if let Some(&t) = ts.get_ref().iter().find(|&&t| !(t >= 0.0 && t <= t_end)) {
                    return Err(err(line, format!("snapshot time {t} outside [0, t_end = {t_end}]")));
                }
                ts.get_ref().clone()
            }
            None => DEFAULT_TIMES.iter().copied().filter(|&t| t <= t_end).collect(),
        };
        times.extend(REQUIRED_TIMES.iter().copied().filter(|&t| t <= t_end));
        times.push(t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();

        let threads = match &sweep.threads {
            Some(n) if *n.get_ref() == 0 => return Err(err(at(n.span()), "threads must be at least 1".into())),
            Some(n) => Some(*n.get_ref()),
            None => None,
        };

        let init_line = table_line(text, "initial");
        let ri = &raw.initial;
        let mut initial = InitialDataSpec::new(sorted[0]);
        if let Some(b) = &ri.blend {
            initial.blend = b.parse::<Blend>().map_err(|e| err(init_line, e.to_string()))?;
        }
        initial.s_min = ri.s_min.unwrap_or(initial.s_min);
        initial.s_switch = ri.s_switch;
        initial.n_points = ri.n_points;
        initial.h_max = ri.h_max.unwrap_or(initial.h_max);
        initial.grading = ri.grading.unwrap_or(initial.grading);
        initial.cap_points = ri.cap_points;
        for &k in &k_list {
            let spec = InitialDataSpec { k, ..initial.clone() };
            spec.validate().map_err(|e| err(init_line, format!("k = {k}: {e}")))?;
        }

        let solver_line = table_line(text, "solver");
        let rs = &raw.solver;
        let mut solver = SolverConfig::default();
        if let Some(s) = &rs.scheme {
            solver.scheme = s.parse::<Scheme>().map_err(|e| err(solver_line, e.to_string()))?;
        }
        let boundary = match &rs.boundary {
            Some(b) => b.parse::<BoundaryTag>().map_err(|e| err(solver_line, e.to_string()))?,
            None => BoundaryTag::default(),
        };
        solver.dt_init = rs.dt_init.unwrap_or(solver.dt_init);
        solver.dt_max = rs.dt_max.unwrap_or(solver.dt_max);
        solver.du_max = rs.du_max.unwrap_or(solver.du_max);
        solver.newton_tol = rs.newton_tol.unwrap_or(solver.newton_tol);
        solver.newton_max_iter = rs.newton_max_iter.unwrap_or(solver.newton_max_iter);
        solver.dt_force = rs.dt_force.unwrap_or(solver.dt_force);
        solver.validate().map_err(|e| err(solver_line, e.to_string()))?;

        let report_line = table_line(text, "report");
        let rr = &raw.report;
        let eps_hat = rr.eps_hat.unwrap_or(cuspflow::diagnostics::DEFAULT_EPS_HAT);
        cuspflow::diagnostics::reporting_annulus(eps_hat).map_err(|e| err(report_line, e.to_string()))?;
        if rr.alpha_hat.is_some_and(|a| !(a >= 1.0)) {
            return Err(err(report_line, "alpha_hat must be at least 1".into()));
        }
        if rr.decay_c.is_some_and(|c| !(c >= 0.0)) {
            return Err(err(report_line, "decay_c must be non-negative".into()));
        }

        Ok(Self {
            k_list,
            t_end,
            snapshot_times: times,
            output_dir: sweep.output_dir.clone(),
            threads,
            seed: sweep.seed,
            initial,
            solver,
            boundary,
            eps_hat,
            alpha_hat: rr.alpha_hat,
            decay_c: rr.decay_c,
        })
    }

    pub fn spec_for(&self, k: u32) -> InitialDataSpec {
        InitialDataSpec { k, ..self.initial.clone() }
    }
}
