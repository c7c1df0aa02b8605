//! Implicit finite-difference solver for `u_t = e^{-2u} u_ss` on a log-polar
//! grid, optionally closed off at the origin by a Cartesian cap.
//!
//! The cap is stored in the scaled variables `ρ = r / r_switch` and
//! `v̂ = v − s_switch`, in which the cap equation reads `v̂_t = e^{-2v̂} Δ_ρ v̂`
//! and `v̂ = u` at the shared interface node. All unknowns live in one vector
//! (log-polar nodes outward, then cap nodes from the interface down to the
//! centre), so each Newton iteration is a single tridiagonal solve.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use crate::charts::{curvature_samples, first_diff_weights, second_diff_weights, Chart, CurvatureSample, RadialProfile};
use crate::closed_forms::{ClosedFormMetric, ScaleFactor};
use crate::error::{Error, Result};
use crate::initial_data::InitialProfile;
use crate::tridiag::Tridiagonal;

/// Steps shorter than this abort the run.
pub const DT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward_euler" => Ok(Scheme::BackwardEuler),
            "crank_nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(Error::Config(format!(
                "unknown scheme {other:?}; expected \"backward_euler\" or \"crank_nicolson\""
            ))),
        }
    }
}

/// Which closed-form flow supplies the Dirichlet value at `s_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    /// `−ln s + ½ ln(1 + 2t)`
    #[default]
    DilatingHyperbolic,
    /// `−ln sinh s + ½ ln(1 + 2t)`
    PoincareLower,
    /// Annulus metric with `ε = e^{−2k}`, dilated by `1 + 2t`.
    AnnulusUpper,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::DilatingHyperbolic => "dilating_hyperbolic",
            BoundaryTag::PoincareLower => "poincare_lower",
            BoundaryTag::AnnulusUpper => "annulus_upper",
        }
    }

    pub fn metric(self, k: u32) -> Result<ClosedFormMetric> {
        let base = match self {
            BoundaryTag::DilatingHyperbolic => ClosedFormMetric::HyperbolicPunctured,
            BoundaryTag::PoincareLower => ClosedFormMetric::Poincare,
            BoundaryTag::AnnulusUpper => ClosedFormMetric::hyperbolic_annulus((-2.0 * f64::from(k)).exp())?,
        };
        base.scaled(ScaleFactor::Dilating)
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dilating_hyperbolic" => Ok(BoundaryTag::DilatingHyperbolic),
            "poincare_lower" => Ok(BoundaryTag::PoincareLower),
            "annulus_upper" => Ok(BoundaryTag::AnnulusUpper),
            other => Err(Error::Config(format!(
                "unknown boundary {other:?}; expected dilating_hyperbolic, poincare_lower or annulus_upper"
            ))),
        }
    }
}

/// Dirichlet value at `s_min` for the given tag.
pub fn boundary_values(tag: BoundaryTag, k: u32, s_min: f64, t: f64) -> Result<f64> {
    tag.metric(k)?.eval(s_min, t)
}

/// Width of the barrier sandwich at `s_min`: annulus factor minus Poincare
/// factor. Both scale the same way in time, so this is time independent.
pub fn boundary_uncertainty(k: u32, s_min: f64) -> Result<f64> {
    let upper = BoundaryTag::AnnulusUpper.metric(k)?.eval(s_min, 0.0)?;
    let lower = BoundaryTag::PoincareLower.metric(k)?.eval(s_min, 0.0)?;
    Ok(upper - lower)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub scheme: Scheme,
    pub dt_init: f64,
    pub dt_max: f64,
    /// Largest accepted change of any unknown in one step.
    pub du_max: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Steps this short are accepted past `du_max`, provided no unknown drops
    /// by more than ½ (the limit below which the scheme stays monotone). This
    /// lets the curvature spike at the glued junctions relax.
    pub dt_force: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::BackwardEuler,
            dt_init: 1e-6,
            dt_max: 0.01,
            du_max: 0.02,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            dt_force: 1e-10,
        }
    }
}

impl SolverConfig {
    /// Fixed step `dt`: no growth and no change limit.
    pub fn fixed(scheme: Scheme, dt: f64) -> Self {
        Self { scheme, dt_init: dt, dt_max: dt, du_max: f64::INFINITY, dt_force: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("dt_max", self.dt_max),
            ("du_max", self.du_max),
            ("newton_tol", self.newton_tol),
        ];
        for (name, x) in positive {
            if !(x > 0.0) {
                return Err(Error::Config(format!("{name} = {x} must be positive")));
            }
        }
        if self.dt_init > self.dt_max {
            return Err(Error::Config(format!("dt_init = {} exceeds dt_max = {}", self.dt_init, self.dt_max)));
        }
        if !(self.dt_force >= 0.0) {
            return Err(Error::Config(format!("dt_force = {} must be non-negative", self.dt_force)));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::Config("newton_max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dirichlet data at a grid end.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Fixed(f64),
    /// Closed-form flow evaluated at the boundary node.
    Metric(ClosedFormMetric),
}

impl Boundary {
    fn value(&self, s: f64, t: f64) -> Result<f64> {
        match self {
            Boundary::Fixed(v) => Ok(*v),
            Boundary::Metric(m) => m.eval(s, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cap {
    /// Cells across `[0, 1]` in `ρ`.
    cells: usize,
    r_switch: f64,
    s_switch: f64,
}

/// Node layout and the linear operator `L(x) = A x + f` whose nonlinear
/// weighting `e^{-2x}` gives the flow.
#[derive(Debug, Clone)]
pub struct Mesh {
    polar: Vec<f64>,
    cap: Option<Cap>,
    op: Tridiagonal,
    offset: Vec<f64>,
    left: Boundary,
    right: Option<Boundary>,
}

fn check_grid(s: &[f64]) -> Result<()> {
    if s.len() < 3 {
        return Err(Error::Construction(format!("log-polar grid has {} nodes, need at least 3", s.len())));
    }
    if !s.windows(2).all(|w| w[1] > w[0]) || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Construction("log-polar grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl Mesh {
    /// Log-polar grid with Dirichlet data at both ends.
    pub fn interval(s: Vec<f64>, left: Boundary, right: Boundary) -> Result<Self> {
        check_grid(&s)?;
        let n = s.len();
        let mut op = Tridiagonal::zeros(n);
        for i in 1..n - 1 {
            let (a, b, c) = second_diff_weights(s[i] - s[i - 1], s[i + 1] - s[i]);
            op.lower[i] = a;
            op.diag[i] = b;
            op.upper[i] = c;
        }
        Ok(Self { polar: s, cap: None, op, offset: vec![0.0; n], left, right: Some(right) })
    }

    /// Log-polar grid from `s[0]` to `s_switch = s[n-1]`, joined to a uniform
    /// cap of `cap_cells` cells; Dirichlet data at `s[0]` only.
    pub fn composite(s: Vec<f64>, cap_cells: usize, left: Boundary) -> Result<Self> {
        check_grid(&s)?;
        if cap_cells < 2 {
            return Err(Error::Construction(format!("cap needs at least 2 cells, got {cap_cells}")));
        }
        let n = s.len();
        let m = cap_cells;
        let total = n + m;
        let mut op = Tridiagonal::zeros(total);
        let mut offset = vec![0.0; total];
        let d = 1.0 / m as f64;
        let rho = |j: usize| j as f64 * d;
        for i in 1..n {
            let hm = s[i] - s[i - 1];
            // beyond the interface the neighbour is cap node m-1 at s_switch - ln ρ
            let hp = if i + 1 < n { s[i + 1] - s[i] } else { -rho(m - 1).ln() };
            let (a, b, c) = second_diff_weights(hm, hp);
            op.lower[i] = a;
            op.diag[i] = b;
            op.upper[i] = c;
            if i + 1 == n {
                offset[i] = c * rho(m - 1).ln();
            }
        }
        // cap node j sits at index n - 1 + m - j
        for j in 1..m {
            let idx = n - 1 + m - j;
            let (a2, b2, c2) = second_diff_weights(d, d);
            let (a1, b1, c1) = first_diff_weights(d, d);
            let r = rho(j);
            op.upper[idx] = a2 + a1 / r;
            op.diag[idx] = b2 + b1 / r;
            op.lower[idx] = c2 + c1 / r;
        }
        let centre = n - 1 + m;
        op.lower[centre] = 4.0 / (d * d);
        op.diag[centre] = -4.0 / (d * d);
        let s_switch = s[n - 1];
        let cap = Cap { cells: m, r_switch: (-s_switch).exp(), s_switch };
        Ok(Self { polar: s, cap: Some(cap), op, offset, left, right: None })
    }

    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    pub fn polar_coords(&self) -> &[f64] {
        &self.polar
    }

    pub fn has_cap(&self) -> bool {
        self.cap.is_some()
    }

    /// Cap radii `r_j = (j/m) r_switch`, `j = 0..=m`.
    pub fn cap_radii(&self) -> Option<Vec<f64>> {
        self.cap.as_ref().map(|c| {
            (0..=c.cells)
                .map(|j| if j == c.cells { c.r_switch } else { j as f64 / c.cells as f64 * c.r_switch })
                .collect()
        })
    }

    fn is_dirichlet(&self, i: usize) -> bool {
        i == 0 || (self.right.is_some() && i + 1 == self.len())
    }

    fn apply_boundaries(&self, x: &mut [f64], t: f64) -> Result<()> {
        x[0] = self.left.value(self.polar[0], t)?;
        if let Some(right) = &self.right {
            let n = self.polar.len();
            x[n - 1] = right.value(self.polar[n - 1], t)?;
        }
        Ok(())
    }

    /// `L(x)` at every row; zero on Dirichlet rows.
    fn operator(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.op.mul_vec(x);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = if self.is_dirichlet(i) { 0.0 } else { *yi + self.offset[i] };
        }
        y
    }

    /// Flow speed `e^{-2x} L(x)` at every unknown.
    pub fn speed(&self, x: &[f64]) -> Vec<f64> {
        self.operator(x).iter().zip(x).map(|(l, xi)| (-2.0 * xi).exp() * l).collect()
    }

    /// Pack profiles into the unknown vector. The cap profile must be on this
    /// mesh's cap radii; its value at the interface is taken from `polar`.
    pub fn pack(&self, polar: &RadialProfile, cap: Option<&RadialProfile>) -> Result<Vec<f64>> {
        if polar.chart() != Chart::LogPolar || polar.coords() != self.polar.as_slice() {
            return Err(Error::Precondition("log-polar profile does not match the mesh".into()));
        }
        let mut x = polar.values().to_vec();
        match (&self.cap, cap) {
            (None, None) => {}
            (Some(c), Some(p)) => {
                if p.chart() != Chart::CartesianRadial || p.len() != c.cells + 1 {
                    return Err(Error::Precondition("cap profile does not match the mesh".into()));
                }
                x.extend(p.values()[..c.cells].iter().rev().map(|v| v - c.s_switch));
            }
            _ => return Err(Error::Precondition("cap profile supplied for a mesh without a cap or vice versa".into())),
        }
        Ok(x)
    }

    /// Split the unknown vector into a log-polar profile and an optional cap profile.
    pub fn unpack(&self, x: &[f64], t: f64) -> Result<(RadialProfile, Option<RadialProfile>)> {
        let n = self.polar.len();
        let polar = RadialProfile::new(Chart::LogPolar, self.polar.clone(), x[..n].to_vec(), t)?;
        let cap = match &self.cap {
            None => None,
            Some(c) => {
                let mut v: Vec<f64> = x[n..].iter().rev().map(|w| w + c.s_switch).collect();
                v.push(x[n - 1] + c.s_switch);
                let r = self.cap_radii().expect("mesh has a cap");
                Some(RadialProfile::new(Chart::CartesianRadial, r, v, t)?)
            }
        };
        Ok((polar, cap))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum StepError {
    #[error("Newton iteration did not converge in {iterations} iterations (last update {last_update:.3e})")]
    NewtonDiverged { iterations: usize, last_update: f64 },
    #[error("non-finite value in the Newton iteration")]
    NonFinite,
    #[error("boundary data: {0}")]
    Boundary(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: State,
    pub newton_iterations: usize,
    /// Largest change of any unknown over the step.
    pub max_change: f64,
    /// Most negative change over the step.
    pub min_change: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub steps: u64,
    pub newton_iterations: u64,
    pub rejected_steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub polar: RadialProfile,
    pub cap: Option<RadialProfile>,
}

impl Snapshot {
    /// `(s, u)` at every node with `r > 0`, cap nodes included, by increasing `s`.
    pub fn log_polar_samples(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.polar.iter().collect();
        if let Some(cap) = &self.cap {
            let n = cap.len();
            out.extend(cap.iter().take(n - 1).rev().filter(|&(r, _)| r > 0.0).map(|(r, v)| {
                let s = -r.ln();
                (s, v - s)
            }));
        }
        out
    }

    /// `(r, v)` at every node, by increasing `r`.
    pub fn cartesian_samples(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = match &self.cap {
            Some(cap) => cap.iter().take(cap.len() - 1).collect(),
            None => Vec::new(),
        };
        out.extend(self.polar.iter().rev().map(|(s, u)| ((-s).exp(), u + s)));
        out
    }

    /// Curvature at every node that has two neighbours, keyed by `s`
    /// (`f64::INFINITY` for the origin).
    pub fn curvature(&self) -> Result<Vec<CurvatureSample>> {
        let mut out = Vec::new();
        match &self.cap {
            None => out.extend(curvature_samples(&self.polar)?),
            Some(cap) => {
                // extend the log-polar part by one cap node to reach the interface
                let n = cap.len();
                let (r, v) = (cap.coords()[n - 2], cap.values()[n - 2]);
                let mut coords = self.polar.coords().to_vec();
                let mut values = self.polar.values().to_vec();
                let s = -r.ln();
                coords.push(s);
                values.push(v - s);
                let joined = RadialProfile::new(Chart::LogPolar, coords, values, self.time)?;
                out.extend(curvature_samples(&joined)?);
                out.extend(curvature_samples(cap)?.into_iter().map(|c| CurvatureSample {
                    coord: if c.coord > 0.0 { -c.coord.ln() } else { f64::INFINITY },
                    ..c
                }));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub stats: SolverStats,
}

impl FlowTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Snapshot at exactly `t`, if recorded.
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - t).abs() <= 1e-12 * t.max(1.0))
    }
}

/// Unrecoverable failure in [`Solver::evolve`], carrying what was computed.
#[derive(Debug, Clone, ThisError)]
#[error("solver failed at t = {time}: {reason}")]
pub struct SolverFailure {
    pub time: f64,
    pub reason: String,
    pub partial: FlowTrajectory,
    pub last_state: State,
}

#[derive(Debug, Clone)]
pub struct Solver {
    mesh: Mesh,
    config: SolverConfig,
}

impl Solver {
    pub fn new(mesh: Mesh, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { mesh, config })
    }

    /// Composite solver for glued initial data with the tagged boundary at `s_min`.
    pub fn for_initial(initial: &InitialProfile, config: SolverConfig, tag: BoundaryTag) -> Result<(Self, State)> {
        let mesh = Mesh::composite(
            initial.polar.coords().to_vec(),
            initial.cap.len() - 1,
            Boundary::Metric(tag.metric(initial.k)?),
        )?;
        let x = mesh.pack(&initial.polar, Some(&initial.cap))?;
        Ok((Self::new(mesh, config)?, State { t: initial.polar.time(), x }))
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn snapshot(&self, state: &State) -> Result<Snapshot> {
        let (polar, cap) = self.mesh.unpack(&state.x, state.t)?;
        Ok(Snapshot { time: state.t, polar, cap })
    }

    /// One implicit step of size `dt`.
    pub fn step(&self, state: &State, dt: f64) -> std::result::Result<StepOutcome, StepError> {
        let mesh = &self.mesh;
        let theta = self.config.scheme.theta();
        let old = &state.x;
        let t_new = state.t + dt;
        let explicit = if theta < 1.0 { mesh.operator(old) } else { vec![0.0; old.len()] };

        let mut w = old.clone();
        mesh.apply_boundaries(&mut w, t_new).map_err(|e| StepError::Boundary(e.to_string()))?;
        let mut jac = mesh.op.clone();
        let mut rhs = vec![0.0; w.len()];
        let mut last_update = f64::INFINITY;
        for iter in 1..=self.config.newton_max_iter {
            let lw = mesh.operator(&w);
            for i in 0..w.len() {
                if mesh.is_dirichlet(i) {
                    jac.lower[i] = 0.0;
                    jac.upper[i] = 0.0;
                    jac.diag[i] = 1.0;
                    rhs[i] = 0.0;
                    continue;
                }
                let change = w[i] - old[i];
                let e2w = (2.0 * w[i]).exp();
                let lag = (1.0 - theta) * (2.0 * change).exp() * explicit[i];
                rhs[i] = -(e2w * change / dt - theta * lw[i] - lag);
                jac.diag[i] = e2w * (1.0 + 2.0 * change) / dt - theta * mesh.op.diag[i] - 2.0 * lag;
                jac.lower[i] = -theta * mesh.op.lower[i];
                jac.upper[i] = -theta * mesh.op.upper[i];
            }
            let delta = jac.solve(&rhs).map_err(|_| StepError::NonFinite)?;
            let size = delta.iter().fold(0.0f64, |m, d| m.max(d.abs()));
            // relative to magnitude: far down the tail the unknowns reach ~1e2
            // and a long quasi-static chain amplifies their rounding
            let scaled = delta.iter().zip(&w).fold(0.0f64, |m, (d, wi)| m.max(d.abs() / (1.0 + wi.abs())));
            if !size.is_finite() {
                return Err(StepError::NonFinite);
            }
            let damp = if size > 1.0 { 1.0 / size } else { 1.0 };
            for (wi, di) in w.iter_mut().zip(&delta) {
                *wi += damp * di;
            }
            last_update = size;
            if scaled < self.config.newton_tol {
                let max_change = w.iter().zip(old).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                let min_change = w.iter().zip(old).fold(0.0f64, |m, (a, b)| m.min(a - b));
                return Ok(StepOutcome {
                    state: State { t: t_new, x: w },
                    newton_iterations: iter,
                    max_change,
                    min_change,
                });
            }
        }
        Err(StepError::NewtonDiverged { iterations: self.config.newton_max_iter, last_update })
    }

    /// Adaptive evolution to `t_end`, recording snapshots at `t = 0` (or the
    /// initial time) and at each requested time, landing on them exactly.
    pub fn evolve(
        &self,
        initial: State,
        t_end: f64,
        snapshot_times: &[f64],
    ) -> std::result::Result<FlowTrajectory, SolverFailure> {
        let mut state = initial;
        let mut stats = SolverStats { min_dt: f64::INFINITY, ..SolverStats::default() };
        let mut snapshots = Vec::new();
        let fail = |state: &State, snapshots: Vec<Snapshot>, stats: SolverStats, reason: String| SolverFailure {
            time: state.t,
            reason,
            partial: FlowTrajectory { snapshots, stats },
            last_state: state.clone(),
        };
        let mut targets: Vec<f64> = snapshot_times.iter().copied().filter(|&t| t > state.t).collect();
        if snapshot_times.windows(2).any(|w| !(w[1] > w[0])) || targets.iter().any(|&t| t > t_end) {
            return Err(fail(&state, snapshots, stats, "snapshot times must be increasing and within [0, t_end]".into()));
        }
        if targets.last().map_or(true, |&t| t < t_end) && t_end > state.t {
            targets.push(t_end);
        }
        let record = |state: &State, snaps: &mut Vec<Snapshot>| -> std::result::Result<(), String> {
            snaps.push(self.snapshot(state).map_err(|e| e.to_string())?);
            Ok(())
        };
        if let Err(e) = record(&state, &mut snapshots) {
            return Err(fail(&state, snapshots, stats, e));
        }

        let mut dt = self.config.dt_init;
        for target in targets {
            while state.t < target {
                let remaining = target - state.t;
                let landing = dt >= remaining * (1.0 - 1e-9);
                let h = if landing { remaining } else { dt.min(self.config.dt_max) };
                let forced = h <= self.config.dt_force;
                match self.step(&state, h) {
                    Ok(out) if out.max_change <= self.config.du_max || (forced && out.min_change > -0.5) => {
                        stats.steps += 1;
                        stats.newton_iterations += out.newton_iterations as u64;
                        stats.min_dt = stats.min_dt.min(h);
                        stats.max_dt = stats.max_dt.max(h);
                        let growth = if out.max_change > 0.0 {
                            (0.9 * self.config.du_max / out.max_change).clamp(0.5, 1.5)
                        } else {
                            1.5
                        };
                        let base = if landing { dt.max(h) } else { h };
                        dt = (base * growth).min(self.config.dt_max);
                        state = out.state;
                        if landing {
                            state.t = target;
                        }
                    }
                    Ok(_) | Err(StepError::NewtonDiverged { .. }) | Err(StepError::NonFinite) => {
                        stats.rejected_steps += 1;
                        dt = h / 2.0;
                        if dt < DT_FLOOR {
                            return Err(fail(&state, snapshots, stats, format!("time step fell below {DT_FLOOR:e}")));
                        }
                    }
                    Err(e) => return Err(fail(&state, snapshots, stats, e.to_string())),
                }
            }
            if let Err(e) = record(&state, &mut snapshots) {
                return Err(fail(&state, snapshots, stats, e));
            }
        }
        if stats.steps == 0 {
            stats.min_dt = 0.0;
        }
        Ok(FlowTrajectory { snapshots, stats })
    }
}

impl fmt::Display for SolverStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} steps, {} Newton iterations, {} rejected, dt in [{:.2e}, {:.2e}]",
            self.steps, self.newton_iterations, self.rejected_steps, self.min_dt, self.max_dt
        )
    }
}
