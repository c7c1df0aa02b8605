//! Comparison-principle checks and the inequality suite run on trajectories.

use std::f64::consts::PI;

use crate::charts::{first_diff_weights, second_diff_weights, Chart};
use crate::closed_forms::{make_barrier_pair, ClosedFormMetric, Jet};
use crate::error::{Error, Result};
use crate::report::{ReportEntry, VerificationReport};
use crate::solver::{FlowTrajectory, Snapshot};

/// Curvature samples whose rounding bound exceeds this are skipped.
pub const CURVATURE_RESOLUTION: f64 = 0.01;

/// Snapshot times every named check may rely on (those up to the final time).
pub const REQUIRED_TIMES: [f64; 5] = [0.0, 0.01, 0.5, 0.75, 1.0];

pub mod names {
    pub const UPPER_CIGAR: &str = "upper cigar barrier";
    pub const LOWER_CIGAR: &str = "lower cigar barrier";
    pub const INSULATING: &str = "insulating bound";
    pub const AT_K: &str = "bound at s = k";
    pub const HALF_ON_K: &str = "bound at t = 1/2 on s <= k";
    pub const HALF_GLOBAL: &str = "global bound at t = 1/2";
    pub const SHORT_TIME: &str = "short-time lower bound";
    pub const ANNULUS: &str = "dilated annulus envelope";
    pub const CHEN: &str = "curvature >= -1/(1+2t)";
    pub const CHEN_GENERAL: &str = "curvature >= -1/(2t+1/kappa0)";
    pub const ORIGIN: &str = "origin control";
    pub const DECAY: &str = "decay envelope";

    /// Entries that together make up the barrier sandwich.
    pub const SANDWICH: [&str; 2] = [UPPER_CIGAR, LOWER_CIGAR];
    /// Entries of the main inequality suite.
    pub const SUITE: [&str; 8] = [INSULATING, AT_K, HALF_ON_K, HALF_GLOBAL, SHORT_TIME, ANNULUS, CHEN, CHEN_GENERAL];
    /// Entries that depend on fitted constants.
    pub const FITTED: [&str; 2] = [ORIGIN, DECAY];
}

/// Values sampled on a fixed grid at several times, `values[time][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub chart: Chart,
    pub coords: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    pub fn new(chart: Chart, coords: Vec<f64>, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&coords) || !increasing(&times) {
            return Err(Error::Precondition("field coordinates and times must increase".into()));
        }
        if values.len() != times.len() || values.iter().any(|row| row.len() != coords.len()) {
            return Err(Error::Precondition("field values do not match its grid".into()));
        }
        Ok(Self { chart, coords, times, values })
    }

    pub fn sample(chart: Chart, coords: Vec<f64>, times: Vec<f64>, f: impl Fn(f64, f64) -> Result<f64>) -> Result<Self> {
        let values = times
            .iter()
            .map(|&t| coords.iter().map(|&x| f(x, t)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(chart, coords, times, values)
    }

    /// Linear interpolation in time at node `i`.
    fn at_time(&self, i: usize, t: f64) -> Result<f64> {
        let ts = &self.times;
        if t < ts[0] || t > ts[ts.len() - 1] {
            return Err(Error::Domain(format!("time {t} outside the sampled range [{}, {}]", ts[0], ts[ts.len() - 1])));
        }
        let j = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1);
        let (t0, t1) = (ts[j - 1], ts[j]);
        let w = (t - t0) / (t1 - t0);
        Ok((1.0 - w) * self.values[j - 1][i] + w * self.values[j][i])
    }
}

/// `∂_t w − e^{-2w} Δw` by central differences at interior times and nodes.
/// In the CartesianRadial chart the origin is included through the symmetric
/// stencil. Negative values mark a subsolution.
pub fn rf_residual(field: &SpaceTimeField) -> Result<SpaceTimeField> {
    let (nt, nx) = (field.times.len(), field.coords.len());
    if nt < 3 || nx < 3 {
        return Err(Error::Domain(format!("residual needs at least 3 times and 3 nodes, got {nt} x {nx}")));
    }
    let xs = &field.coords;
    let with_origin = field.chart == Chart::CartesianRadial && xs[0] == 0.0;
    let nodes: Vec<usize> = (if with_origin { 0 } else { 1 }..nx - 1).collect();
    let mut values = Vec::with_capacity(nt - 2);
    for j in 1..nt - 1 {
        let (tm, tp) = (field.times[j] - field.times[j - 1], field.times[j + 1] - field.times[j]);
        let (ta, tb, tc) = first_diff_weights(tm, tp);
        let (prev, cur, next) = (&field.values[j - 1], &field.values[j], &field.values[j + 1]);
        let row = nodes
            .iter()
            .map(|&i| {
                let dt = ta * prev[i] + tb * cur[i] + tc * next[i];
                let lap = match field.chart {
                    Chart::LogPolar => {
                        let (a, b, c) = second_diff_weights(xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                        a * cur[i - 1] + b * cur[i] + c * cur[i + 1]
                    }
                    Chart::CartesianRadial if i == 0 => 4.0 * (cur[1] - cur[0]) / (xs[1] * xs[1]),
                    Chart::CartesianRadial => {
                        let (hm, hp) = (xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                        let (a2, b2, c2) = second_diff_weights(hm, hp);
                        let (a1, b1, c1) = first_diff_weights(hm, hp);
                        let r = xs[i];
                        (a2 + a1 / r) * cur[i - 1] + (b2 + b1 / r) * cur[i] + (c2 + c1 / r) * cur[i + 1]
                    }
                };
                dt - (-2.0 * cur[i]).exp() * lap
            })
            .collect();
        values.push(row);
    }
    SpaceTimeField::new(
        field.chart,
        nodes.iter().map(|&i| xs[i]).collect(),
        field.times[1..nt - 1].to_vec(),
        values,
    )
}

/// A field with analytic log-polar derivatives.
pub trait Flow {
    fn jet(&self, s: f64, t: f64) -> Result<Jet>;

    fn residual(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.jet(s, t)?.flow_residual())
    }
}

impl Flow for ClosedFormMetric {
    fn jet(&self, s: f64, t: f64) -> Result<Jet> {
        ClosedFormMetric::jet(self, s, t)
    }
}

/// `v_ε(x, t) = v(x, ln(εt + 1)/ε) + ½ ln(εt + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonStretch<F> {
    pub inner: F,
    pub eps: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("stretch parameter eps = {eps} must be positive")))
    }
}

pub fn epsilon_stretch<F: Flow>(inner: F, eps: f64) -> Result<EpsilonStretch<F>> {
    check_eps(eps)?;
    Ok(EpsilonStretch { inner, eps })
}

impl<F> EpsilonStretch<F> {
    /// Reparametrised time `ln(εt + 1)/ε`.
    pub fn inner_time(&self, t: f64) -> f64 {
        (self.eps * t).ln_1p() / self.eps
    }

    /// Exact residual of the stretch of an exact flow.
    pub fn expected_residual(&self, t: f64) -> f64 {
        self.eps / (2.0 * (self.eps * t + 1.0))
    }
}

impl<F: Flow> Flow for EpsilonStretch<F> {
    fn jet(&self, s: f64, t: f64) -> Result<Jet> {
        let stretch = self.eps * t + 1.0;
        let j = self.inner.jet(s, self.inner_time(t))?;
        Ok(Jet {
            value: j.value + 0.5 * stretch.ln(),
            dt: j.dt / stretch + self.eps / (2.0 * stretch),
            laplacian: j.laplacian,
            speed: j.speed / stretch,
        })
    }
}

/// Stretch of a sampled field, interpolating linearly in time.
pub fn epsilon_stretch_field(field: &SpaceTimeField, eps: f64, times: Vec<f64>) -> Result<SpaceTimeField> {
    check_eps(eps)?;
    let values = times
        .iter()
        .map(|&t| {
            let stretch = eps * t + 1.0;
            let tau = stretch.ln() / eps;
            (0..field.coords.len())
                .map(|i| Ok(field.at_time(i, tau)? + 0.5 * stretch.ln()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(field.chart, field.coords.clone(), times, values)
}

/// Either side of an ordering check, evaluated in the log-polar chart.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Closed(&'a ClosedFormMetric),
    Trajectory(&'a FlowTrajectory),
    /// `u = f(s, t)` for ad hoc bounds.
    Bound(&'a dyn Fn(f64, f64) -> f64),
}

/// A range of `s`, closed at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub lo: f64,
    pub hi: f64,
}

impl Region {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.lo && s <= self.hi
    }

    fn describe(&self) -> String {
        if self.hi.is_infinite() {
            format!("s >= {}", self.lo)
        } else {
            format!("s in [{}, {}]", self.lo, self.hi)
        }
    }
}

/// Points used when neither side carries a grid.
const CLOSED_FORM_SAMPLES: usize = 401;

fn snapshot_at<'a>(traj: &'a FlowTrajectory, t: f64) -> Result<&'a Snapshot> {
    traj.at(t)
        .ok_or_else(|| Error::Precondition(format!("trajectory has no snapshot at t = {t}")))
}

fn eval_field(f: &Field<'_>, s: f64, t: f64, samples: Option<&[(f64, f64)]>) -> Result<f64> {
    match f {
        Field::Closed(m) => m.eval(s, t),
        Field::Bound(g) => Ok(g(s, t)),
        Field::Trajectory(_) => {
            let samples = samples.expect("trajectory samples");
            let i = samples.partition_point(|&(x, _)| x < s);
            Ok(samples[i].1)
        }
    }
}

/// Largest `B − A` over the region and times; the entry passes when it is at
/// most `tolerance`. Trajectories are compared at their own nodes.
pub fn check_ordering(
    name: &str,
    a: Field<'_>,
    b: Field<'_>,
    region: Region,
    times: &[f64],
    tolerance: f64,
) -> Result<ReportEntry> {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for &t in times {
        let traj = match (&a, &b) {
            (Field::Trajectory(x), _) | (_, Field::Trajectory(x)) => Some(*x),
            _ => None,
        };
        let samples = traj.map(|x| snapshot_at(x, t).map(|s| s.log_polar_samples())).transpose()?;
        let points: Vec<f64> = match &samples {
            Some(sm) => sm.iter().map(|&(s, _)| s).filter(|&s| region.contains(s)).collect(),
            None => {
                if !region.hi.is_finite() {
                    return Err(Error::Precondition("an unbounded region needs a trajectory to sample".into()));
                }
                let n = CLOSED_FORM_SAMPLES;
                (0..n).map(|i| region.lo + (region.hi - region.lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        for s in points {
            let d = eval_field(&b, s, t, samples.as_deref())? - eval_field(&a, s, t, samples.as_deref())?;
            if d > worst || d.is_nan() {
                worst = d;
                at = Some((s, t));
            }
        }
    }
    let region_text = region.describe();
    Ok(match at {
        None => ReportEntry::not_applicable(name, region_text, "no samples in region at the requested times"),
        Some((s, t)) => ReportEntry::measured(name, region_text, times.to_vec(), worst, tolerance)
            .with_note(format!("worst at s = {s:.6}, t = {t}")),
    })
}

/// Tolerance and fitted constants for [`check_named_inequalities`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NamedParams {
    pub tolerance: f64,
    /// Constant in the expanding-disc bound; fitted on this trajectory when `None`.
    pub alpha_hat: Option<f64>,
    /// Constant in the `c/τ` envelope; fitted on this trajectory when `None`.
    pub decay_c: Option<f64>,
}

impl NamedParams {
    /// `0.05 + 10 h²` in conformal-factor units.
    pub fn for_spacing(h_max: f64) -> Self {
        Self { tolerance: 0.05 + 10.0 * h_max * h_max, alpha_hat: None, decay_c: None }
    }
}

/// `sup v` over `r ≤ radius` at one snapshot.
fn sup_v_within(snap: &Snapshot, radius: f64) -> f64 {
    snap.cartesian_samples()
        .into_iter()
        .filter(|&(r, _)| r <= radius)
        .fold(f64::NEG_INFINITY, |m, (_, v)| m.max(v))
}

fn origin_times(traj: &FlowTrajectory) -> Vec<f64> {
    traj.times().into_iter().filter(|&t| t >= 0.75).collect()
}

fn decay_times(traj: &FlowTrajectory) -> Vec<f64> {
    traj.times().into_iter().filter(|&t| t > 0.5 && t <= 10.5).collect()
}

fn decay_tau(t: f64) -> f64 {
    (t - 0.5) / 10.0
}

/// Rescaled `sup_{r ≤ ½} v` for the flow `g_k(½ + 10τ)/10`.
fn rescaled_sup(snap: &Snapshot) -> f64 {
    -0.5 * 10f64.ln() + sup_v_within(snap, 0.5)
}

/// Smallest `(α̂, c)` for which the origin-control and decay envelopes hold
/// on this trajectory (`α̂ ≥ 1`, `c ≥ 0`).
pub fn fit_origin_constants(traj: &FlowTrajectory) -> (f64, f64) {
    let alpha = origin_times(traj)
        .into_iter()
        .filter_map(|t| traj.at(t))
        .map(|s| (2.0 * (sup_v_within(s, 0.25) - (16.0f64 / 3.0).ln())).exp() - 2.0 * s.time)
        .fold(1.0f64, f64::max);
    let c = decay_times(traj)
        .into_iter()
        .filter_map(|t| traj.at(t))
        .map(|s| decay_tau(s.time) * rescaled_sup(s))
        .fold(0.0f64, f64::max);
    (alpha, c)
}

fn times_in(traj: &FlowTrajectory, lo: f64, hi: f64) -> Vec<f64> {
    traj.times().into_iter().filter(|&t| t >= lo && t <= hi).collect()
}

fn entry_from(name: &str, region: &str, samples: Vec<(f64, f64, f64)>, tol: f64, empty: &str) -> ReportEntry {
    // samples are (violation, s or r, t)
    let times: Vec<f64> = {
        let mut t: Vec<f64> = samples.iter().map(|x| x.2).collect();
        t.dedup();
        t
    };
    match samples.into_iter().fold(None::<(f64, f64, f64)>, |m, x| match m {
        Some(w) if !(x.0 > w.0 || x.0.is_nan()) => Some(w),
        _ => Some(x),
    }) {
        None => ReportEntry::not_applicable(name, region, empty),
        Some((v, x, t)) => {
            ReportEntry::measured(name, region, times, v, tol).with_note(format!("worst at {x:.6} , t = {t}"))
        }
    }
}

/// Curvature lower bound `K ≥ bound(t)` over resolved samples.
fn curvature_entry(
    name: &str,
    traj: &FlowTrajectory,
    bound: impl Fn(f64) -> f64,
    tol: f64,
) -> Result<ReportEntry> {
    let mut samples = Vec::new();
    let mut skipped = 0usize;
    for snap in &traj.snapshots {
        for c in snap.curvature()? {
            if c.rounding > CURVATURE_RESOLUTION {
                skipped += 1;
                continue;
            }
            samples.push((bound(snap.time) - c.k, c.coord, snap.time));
        }
    }
    let e = entry_from(name, "all resolved nodes (s; inf = origin)", samples, tol, "no resolved curvature samples");
    let note = e.note.clone().unwrap_or_default();
    Ok(e.with_note(format!("{note}; {skipped} unresolved samples skipped")))
}

/// Most negative resolved curvature at the first snapshot, floored at 1.
pub fn initial_curvature_scale(traj: &FlowTrajectory) -> Result<f64> {
    let first = traj
        .snapshots
        .first()
        .ok_or_else(|| Error::Precondition("trajectory has no snapshots".into()))?;
    Ok(first
        .curvature()?
        .iter()
        .filter(|c| c.rounding <= CURVATURE_RESOLUTION)
        .fold(1.0f64, |m, c| m.max(-c.k)))
}

/// The named inequality suite for one member of the sequence.
pub fn check_named_inequalities(traj: &FlowTrajectory, k: u32, params: &NamedParams) -> Result<VerificationReport> {
    let last = traj
        .snapshots
        .last()
        .ok_or_else(|| Error::Precondition("trajectory has no snapshots".into()))?
        .time;
    for t in REQUIRED_TIMES.iter().filter(|&&t| t <= last) {
        snapshot_at(traj, *t)?;
    }
    let tol = params.tolerance;
    let kf = f64::from(k);
    let bp = make_barrier_pair(k)?;
    let early = times_in(traj, 0.0, 0.5);
    let mut report = VerificationReport::new(format!("k={k}"));

    let u_traj = Field::Trajectory(traj);
    let from_k = Region::new(kf, f64::INFINITY);
    report.push(check_ordering(names::UPPER_CIGAR, Field::Closed(&bp.upper), u_traj, from_k, &early, tol)?);
    report.push(check_ordering(names::LOWER_CIGAR, u_traj, Field::Closed(&bp.lower), from_k, &early, tol)?);

    let insulating = |s: f64, _t: f64| 0.5 * (PI * PI / 2.0).ln() - s.ln();
    report.push(check_ordering(
        names::INSULATING,
        Field::Bound(&insulating),
        u_traj,
        Region::new(0.0, kf),
        &early,
        tol,
    )?);

    let mut at_k = Vec::new();
    for &t in &early {
        let snap = snapshot_at(traj, t)?;
        let u = snap
            .polar
            .value_at(kf)
            .ok_or_else(|| Error::Precondition(format!("s = {kf} is outside the grid")))?;
        at_k.push((u - (0.5 * 5f64.ln() - kf.ln()), kf, t));
    }
    report.push(entry_from(names::AT_K, &format!("s = {kf}"), at_k, tol, "no snapshot in [0, 1/2]"));

    let half: Vec<f64> = times_in(traj, 0.5, 0.5);
    let ten_above = |s: f64, _t: f64| 0.5 * 10f64.ln() - s.ln();
    report.push(check_ordering(names::HALF_ON_K, Field::Bound(&ten_above), u_traj, Region::new(0.0, kf), &half, tol)?);
    report.push(check_ordering(
        names::HALF_GLOBAL,
        Field::Bound(&ten_above),
        u_traj,
        Region::new(0.0, f64::INFINITY),
        &half,
        tol,
    )?);

    let ten_below = |s: f64, _t: f64| -s.ln() - 0.5 * 10f64.ln();
    report.push(check_ordering(
        names::SHORT_TIME,
        u_traj,
        Field::Bound(&ten_below),
        Region::new(0.0, kf),
        &times_in(traj, 0.0, 0.01),
        tol,
    )?);

    let annulus = ClosedFormMetric::hyperbolic_annulus((-2.0 * kf).exp())?.scaled(crate::ScaleFactor::Dilating)?;
    let all = traj.times();
    // open at 2k, where the annulus factor blows up
    let below_2k = Region::new(0.0, 2.0 * kf * (1.0 - 1e-12));
    report.push(check_ordering(names::ANNULUS, Field::Closed(&annulus), u_traj, below_2k, &all, tol)?);

    report.push(curvature_entry(names::CHEN, traj, |t| -1.0 / (1.0 + 2.0 * t), tol)?);
    let kappa0 = initial_curvature_scale(traj)?;
    let general = curvature_entry(names::CHEN_GENERAL, traj, |t| -1.0 / (2.0 * t + 1.0 / kappa0), tol)?;
    let note = general.note.clone().unwrap_or_default();
    report.push(general.with_note(format!("{note}; kappa0 = {kappa0:.6e}")));

    let (fit_alpha, fit_c) = fit_origin_constants(traj);
    let alpha = params.alpha_hat.unwrap_or(fit_alpha);
    let c = params.decay_c.unwrap_or(fit_c);
    let origin: Vec<(f64, f64, f64)> = origin_times(traj)
        .into_iter()
        .map(|t| {
            let snap = snapshot_at(traj, t)?;
            let bound = (16.0f64 / 3.0).ln() + 0.5 * (alpha + 2.0 * t).ln();
            Ok((sup_v_within(snap, 0.25) - bound, 0.25, t))
        })
        .collect::<Result<_>>()?;
    let e = entry_from(names::ORIGIN, "r <= 1/4, t >= 3/4", origin, tol, "no snapshot at t >= 3/4");
    let note = e.note.clone().unwrap_or_default();
    report.push(e.with_note(format!("{note}; alpha_hat = {alpha:.6}")));

    let decay: Vec<(f64, f64, f64)> = decay_times(traj)
        .into_iter()
        .map(|t| {
            let snap = snapshot_at(traj, t)?;
            Ok((rescaled_sup(snap) - c / decay_tau(t), 0.5, t))
        })
        .collect::<Result<_>>()?;
    let e = entry_from(names::DECAY, "r <= 1/2, tau = (t - 1/2)/10 in (0, 1]", decay, tol, "no snapshot at t > 1/2");
    let note = e.note.clone().unwrap_or_default();
    report.push(e.with_note(format!("{note}; c = {c:.6}")));
    Ok(report)
}
