//! Geometric summaries of trajectories: radial lengths, areas, curvature
//! sups and cross-k convergence tables.

use std::f64::consts::PI;
use std::io::{Read, Write};

use crate::charts::fmt17;
use crate::error::{Error, Result};
use crate::report::ReportEntry;
use crate::solver::{FlowTrajectory, Snapshot};
use crate::verify::{Region, CURVATURE_RESOLUTION};

/// Default reporting annulus parameter.
pub const DEFAULT_EPS_HAT: f64 = 0.2;

/// Inner circle from which lengths are measured.
pub const LENGTH_FROM: f64 = 1.0;

/// `∫ f` over `[lo, hi] ∩ [x₀, x_n]` by the trapezoid rule, interpolating
/// `f` linearly at clipped ends.
fn trapezoid(xs: &[f64], fs: &[f64], lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..xs.len() {
        let (a, b) = (xs[i - 1], xs[i]);
        let (l, h) = (a.max(lo), b.min(hi));
        if h <= l {
            continue;
        }
        let at = |x: f64| fs[i - 1] + (fs[i] - fs[i - 1]) * (x - a) / (b - a);
        total += 0.5 * (h - l) * (at(l) + at(h));
    }
    total
}

fn polar_length(snap: &Snapshot, lo: f64, hi: f64) -> f64 {
    let p = &snap.polar;
    let f: Vec<f64> = p.values().iter().map(|u| u.exp()).collect();
    trapezoid(p.coords(), &f, lo, hi)
}

/// Radial distance from the circle `s = s0` to the origin.
pub fn cusp_length(snap: &Snapshot, s0: f64) -> Result<f64> {
    let s = snap.polar.coords();
    let (first, last) = (s[0], s[s.len() - 1]);
    if !(s0 >= first && s0 <= last) {
        return Err(Error::Domain(format!("s0 = {s0} outside the grid [{first}, {last}]")));
    }
    let mut length = polar_length(snap, s0, last);
    if let Some(cap) = &snap.cap {
        let f: Vec<f64> = cap.values().iter().map(|v| v.exp()).collect();
        length += trapezoid(cap.coords(), &f, 0.0, f64::INFINITY);
    }
    Ok(length)
}

/// Length of the radial segment `s ∈ [lo, hi]` of the log-polar part.
pub fn segment_length(snap: &Snapshot, segment: Region) -> f64 {
    polar_length(snap, segment.lo, segment.hi)
}

/// Area of `{s ∈ region}`; the cap is included when the region reaches the
/// last log-polar node.
pub fn area(snap: &Snapshot, region: Region) -> f64 {
    let p = &snap.polar;
    let f: Vec<f64> = p.values().iter().map(|u| (2.0 * u).exp()).collect();
    let mut total = trapezoid(p.coords(), &f, region.lo, region.hi);
    let last = p.coords()[p.len() - 1];
    if let (Some(cap), true) = (&snap.cap, region.hi >= last && region.lo <= last) {
        let f: Vec<f64> = cap.iter().map(|(r, v)| (2.0 * v).exp() * r).collect();
        total += trapezoid(cap.coords(), &f, 0.0, f64::INFINITY);
    }
    2.0 * PI * total
}

/// Largest resolved `|K|` with `s` in the region, and how many samples were
/// too rounding-dominated to use. `None` when no sample is resolved.
pub fn curvature_sup(snap: &Snapshot, region: Region) -> Result<(Option<f64>, usize)> {
    let mut sup: Option<f64> = None;
    let mut skipped = 0;
    for c in snap.curvature()?.into_iter().filter(|c| region.contains(c.coord)) {
        if c.rounding > CURVATURE_RESOLUTION {
            skipped += 1;
        } else {
            sup = Some(sup.map_or(c.k.abs(), |m| m.max(c.k.abs())));
        }
    }
    Ok((sup, skipped))
}

/// `s ∈ [ln(1/(1−ε̂)), −ln ε̂]`.
pub fn reporting_annulus(eps_hat: f64) -> Result<Region> {
    if !(eps_hat > 0.0 && eps_hat < 0.5) {
        return Err(Error::Domain(format!("eps_hat = {eps_hat} must lie in (0, 1/2)")));
    }
    Ok(Region::new(-(1.0 - eps_hat).ln(), -eps_hat.ln()))
}

/// The disc `r ≤ 1 − ε̂`, origin included.
pub fn reporting_disc(eps_hat: f64) -> Result<Region> {
    Ok(Region::new(reporting_annulus(eps_hat)?.lo, f64::INFINITY))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub length: f64,
    /// Area of `r ≤ e^{-s_switch}`.
    pub cap_area: f64,
    pub annulus_curvature_sup: Option<f64>,
    /// Resolved `sup |K|` over `r ≤ 1 − ε̂`.
    pub disc_curvature_sup: Option<f64>,
    pub disc_unresolved: usize,
    /// `sup |u − (−ln s + ½ln(1+2t))|` on `s ∈ [1, 2]`.
    pub hyperbolic_deviation: f64,
}

pub fn dilating_hyperbolic(s: f64, t: f64) -> f64 {
    -s.ln() + 0.5 * (1.0 + 2.0 * t).ln()
}

fn deviation_on(snap: &Snapshot, region: Region, reference: impl Fn(f64) -> f64) -> f64 {
    snap.polar
        .iter()
        .filter(|&(s, _)| region.contains(s))
        .map(|(s, u)| (u - reference(s)).abs())
        .fold(0.0, f64::max)
}

pub fn diagnostics_record(snap: &Snapshot, eps_hat: f64) -> Result<DiagnosticsRecord> {
    let last = snap.polar.coords()[snap.polar.len() - 1];
    let cap_area = area(snap, Region::new(last, f64::INFINITY));
    let (annulus_curvature_sup, _) = curvature_sup(snap, reporting_annulus(eps_hat)?)?;
    let (disc_curvature_sup, disc_unresolved) = curvature_sup(snap, reporting_disc(eps_hat)?)?;
    let t = snap.time;
    Ok(DiagnosticsRecord {
        t,
        length: cusp_length(snap, LENGTH_FROM)?,
        cap_area,
        annulus_curvature_sup,
        disc_curvature_sup,
        disc_unresolved,
        hyperbolic_deviation: deviation_on(snap, Region::new(1.0, 2.0), |s| dilating_hyperbolic(s, t)),
    })
}

pub fn diagnostics(traj: &FlowTrajectory, eps_hat: f64) -> Result<Vec<DiagnosticsRecord>> {
    traj.snapshots.iter().map(|s| diagnostics_record(s, eps_hat)).collect()
}

/// First time the length drops below half its initial value.
pub fn onset_time(records: &[DiagnosticsRecord]) -> Option<f64> {
    let l0 = records.first()?.length;
    records.iter().find(|r| r.length < 0.5 * l0).map(|r| r.t)
}

/// One row per time, one column per named series.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            let mut rec = vec![fmt17(*t)];
            rec.extend(row.iter().map(|v| fmt17(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::Precondition("table must start with a t column".into()));
        }
        let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let (mut times, mut rows) = (Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Precondition(format!("bad number {x:?} in table: {e}")))
            };
            times.push(parse(&rec[0])?);
            rows.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<_>>>()?);
        }
        Ok(Self { columns, times, rows })
    }
}

/// Radial lengths per k, for `lengths.csv`.
pub fn length_table(records: &[(u32, Vec<DiagnosticsRecord>)]) -> Result<SweepTable> {
    table_of(records, |r| r.length, "L")
}

/// Resolved curvature sups per k over the annulus and the disc.
pub fn curvature_table(records: &[(u32, Vec<DiagnosticsRecord>)]) -> Result<SweepTable> {
    let a = table_of(records, |r| r.annulus_curvature_sup.unwrap_or(f64::NAN), "annulus")?;
    let d = table_of(records, |r| r.disc_curvature_sup.unwrap_or(f64::NAN), "disc")?;
    Ok(SweepTable {
        columns: a.columns.into_iter().chain(d.columns).collect(),
        times: a.times,
        rows: a.rows.into_iter().zip(d.rows).map(|(x, y)| x.into_iter().chain(y).collect()).collect(),
    })
}

fn table_of(
    records: &[(u32, Vec<DiagnosticsRecord>)],
    field: impl Fn(&DiagnosticsRecord) -> f64,
    prefix: &str,
) -> Result<SweepTable> {
    let (_, first) = records.first().ok_or_else(|| Error::Precondition("no trajectories".into()))?;
    let times: Vec<f64> = first.iter().map(|r| r.t).collect();
    for (k, recs) in records {
        if recs.iter().map(|r| r.t).ne(times.iter().copied()) {
            return Err(Error::Precondition(format!("k = {k} has different snapshot times")));
        }
    }
    let rows = (0..times.len()).map(|i| records.iter().map(|(_, recs)| field(&recs[i])).collect()).collect();
    let columns = records.iter().map(|(k, _)| format!("{prefix}_k{k}")).collect();
    Ok(SweepTable { columns, times, rows })
}

/// Deviation of each `u_k` from the dilating hyperbolic factor (columns
/// `hyp_k*`) and from the largest k (columns `ref_k*`) on the annulus.
pub fn convergence_table(trajs: &[(u32, &FlowTrajectory)], annulus: Region) -> Result<SweepTable> {
    let (k_ref, reference) = trajs
        .iter()
        .max_by_key(|(k, _)| *k)
        .ok_or_else(|| Error::Precondition("no trajectories".into()))?;
    let times = reference.times();
    for (k, tr) in trajs {
        if tr.times() != times {
            return Err(Error::Precondition(format!("k = {k} has snapshot times different from k = {k_ref}")));
        }
    }
    let mut columns: Vec<String> = trajs.iter().map(|(k, _)| format!("hyp_k{k}")).collect();
    columns.extend(trajs.iter().map(|(k, _)| format!("ref_k{k}")));
    let mut rows = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let ref_snap = &reference.snapshots[i];
        let mut row: Vec<f64> = trajs
            .iter()
            .map(|(_, tr)| deviation_on(&tr.snapshots[i], annulus, |s| dilating_hyperbolic(s, t)))
            .collect();
        for (k, tr) in trajs {
            let mut worst = 0.0f64;
            for (s, u) in tr.snapshots[i].polar.iter().filter(|&(s, _)| annulus.contains(s)) {
                let r = ref_snap.polar.value_at(s).ok_or_else(|| {
                    Error::Precondition(format!("k = {k}: s = {s} is outside the reference grid"))
                })?;
                worst = worst.max((u - r).abs());
            }
            row.push(worst);
        }
        rows.push(row);
    }
    Ok(SweepTable { columns, times, rows })
}

/// `L_{t=0}(γ) ≤ e^{2M̄ t₀} L_{t₀}(γ)` for the radial segment γ, checked in
/// log form. Not applicable when `|K|` exceeds `M̄` on the segment up to `t₀`.
pub fn distance_distortion_check(traj: &FlowTrajectory, t0: f64, segment: Region, mbar: f64) -> Result<ReportEntry> {
    const NAME: &str = "distance distortion";
    let region = format!("s in [{}, {}], t0 = {t0}", segment.lo, segment.hi);
    let first = traj.snapshots.first().ok_or_else(|| Error::Precondition("empty trajectory".into()))?;
    let last = traj
        .at(t0)
        .ok_or_else(|| Error::Precondition(format!("no snapshot at t0 = {t0}")))?;
    let mut observed = 0.0f64;
    for snap in traj.snapshots.iter().filter(|s| s.time <= t0) {
        let (sup, skipped) = curvature_sup(snap, segment)?;
        if skipped > 0 {
            return Ok(ReportEntry::not_applicable(NAME, region, "curvature unresolved on the segment"));
        }
        observed = observed.max(sup.unwrap_or(0.0));
    }
    // discretised curvature carries an O(h²) error of either sign
    if observed > mbar * (1.0 + 1e-3) {
        return Ok(ReportEntry::not_applicable(
            NAME,
            region,
            format!("sup |K| = {observed:.6} exceeds M = {mbar}"),
        ));
    }
    let (l0, l1) = (segment_length(first, segment), segment_length(last, segment));
    let violation = l0.ln() - l1.ln() - 2.0 * mbar * t0;
    Ok(ReportEntry::measured(NAME, region, vec![first.time, t0], violation, 1e-9)
        .with_note(format!("L(0) = {l0:.9}, L(t0) = {l1:.9}, sup |K| = {observed:.6}")))
}
