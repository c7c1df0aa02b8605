//! Glued initial data: a hyperbolic cusp out to `s = 2k`, a blend into the
//! lower cigar on `[2k, 3k]`, and the lower cigar itself beyond `3k`, carried
//! across the origin by a Cartesian cap.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::charts::{Chart, RadialProfile};
use crate::closed_forms::{make_barrier_pair, neg_ln_sinh, BarrierPair};
use crate::error::{Error, Result};
use crate::grid;
use crate::report::{ReportEntry, VerificationReport};

pub const MIN_K: u32 = 10;

/// Equality checks on constructed data use this tolerance.
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blend {
    /// `φ(x) = x²(3 − 2x)`
    #[default]
    Smoothstep,
    /// `φ(x) = x`
    ClippedLinear,
}

impl Blend {
    pub fn weight(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Blend::Smoothstep => x * x * (3.0 - 2.0 * x),
            Blend::ClippedLinear => x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Blend::Smoothstep => "smoothstep",
            Blend::ClippedLinear => "clipped_linear",
        }
    }
}

impl FromStr for Blend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothstep" => Ok(Blend::Smoothstep),
            "clipped_linear" => Ok(Blend::ClippedLinear),
            other => Err(Error::Config(format!(
                "unknown blend {other:?}; expected \"smoothstep\" or \"clipped_linear\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub k: u32,
    pub blend: Blend,
    pub s_min: f64,
    /// Chart interface; `None` picks [`default_s_switch`].
    pub s_switch: Option<f64>,
    /// Target log-polar node count; overrides `h_max` when set.
    pub n_points: Option<usize>,
    pub h_max: f64,
    /// Geometric growth ratio of the spacing near `s_min`.
    pub grading: f64,
    /// Cells across the cap; `None` matches the last log-polar spacing.
    pub cap_points: Option<usize>,
}

impl InitialDataSpec {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            blend: Blend::Smoothstep,
            s_min: 0.05,
            s_switch: None,
            n_points: None,
            h_max: 0.05,
            grading: 1.05,
            cap_points: None,
        }
    }

    pub fn s_switch(&self) -> f64 {
        self.s_switch.unwrap_or_else(|| default_s_switch(self.k))
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k;
        let bad = |m: String| Err(Error::Construction(m));
        if k < MIN_K {
            return bad(format!(
                "k = {k} is not allowed: the Poincare lower bound for the glued data needs k >= {MIN_K}"
            ));
        }
        let kf = f64::from(k);
        if !(self.s_min > 0.0 && self.s_min <= 0.1) {
            return bad(format!("s_min = {} must lie in (0, 0.1]", self.s_min));
        }
        let sw = self.s_switch();
        if !(sw >= 3.0 * kf + 2.0) || !sw.is_finite() {
            return bad(format!("s_switch = {sw} must be at least 3k + 2 = {}", 3.0 * kf + 2.0));
        }
        if !(self.h_max > 0.0 && self.h_max <= 1.0) {
            return bad(format!("h_max = {} must lie in (0, 1]", self.h_max));
        }
        if !(self.grading >= 1.0 && self.grading <= 2.0) {
            return bad(format!("grading = {} must lie in [1, 2]", self.grading));
        }
        if let Some(m) = self.cap_points {
            if m < 2 {
                return bad(format!("cap_points = {m} must be at least 2"));
            }
        }
        Ok(())
    }

    /// Log-polar nodes with `2k`, `3k` and `s_switch` on the grid.
    pub fn polar_grid(&self) -> Result<Vec<f64>> {
        let kf = f64::from(self.k);
        let breaks = [2.0 * kf, 3.0 * kf, self.s_switch()];
        let build = |h: f64| grid::piecewise_grid(self.s_min, &breaks, h, self.grading);
        match self.n_points {
            Some(n) => grid::fit_point_count(n, self.s_switch() - self.s_min, build),
            None => build(self.h_max),
        }
    }
}

/// Default chart interface: at least `3k + 5`, and ten units past the lower
/// cigar's centre so its whole transition stays on the log-polar grid.
pub fn default_s_switch(k: u32) -> f64 {
    let kf = f64::from(k);
    (3.0 * kf + 5.0).max(kf + kf * kf / 10.0 + 10.0)
}

/// Log-polar part on `[s_min, s_switch]` and Cartesian cap on `[0, e^{-s_switch}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialProfile {
    pub k: u32,
    pub polar: RadialProfile,
    pub cap: RadialProfile,
    /// Blend samples that were clipped back into the barrier band.
    pub clipped_points: usize,
}

pub fn build_initial_profile(spec: &InitialDataSpec) -> Result<InitialProfile> {
    spec.validate()?;
    let k = spec.k;
    let kf = f64::from(k);
    let barriers = make_barrier_pair(k)?;
    let s = spec.polar_grid()?;
    let mut clipped_points = 0;
    let mut u = Vec::with_capacity(s.len());
    for &x in &s {
        let value = if x <= 2.0 * kf {
            -x.ln()
        } else if x >= 3.0 * kf {
            barriers.lower.eval(x, 0.0)?
        } else {
            let lo = barriers.lower.eval(x, 0.0)?;
            let hi = barriers.upper.eval(x, 0.0)?;
            let phi = spec.blend.weight((x - 2.0 * kf) / kf);
            let raw = (1.0 - phi) * (-x.ln()) + phi * lo;
            let clipped = raw.max(lo).min(hi);
            if clipped != raw {
                clipped_points += 1;
            }
            clipped
        };
        u.push(value);
    }

    let sw = spec.s_switch();
    let h_last = s[s.len() - 1] - s[s.len() - 2];
    let m = spec.cap_points.unwrap_or_else(|| ((1.0 / h_last).round() as usize).max(2));
    let r_switch = (-sw).exp();
    let rho = grid::cap_nodes(m)?;
    let r: Vec<f64> = rho.iter().map(|p| p * r_switch).collect();
    let mut v = r.iter().map(|&x| barriers.lower.eval_cartesian(x, 0.0)).collect::<Result<Vec<_>>>()?;
    // the shared node takes its log-polar value exactly
    *v.last_mut().expect("cap is non-empty") = u[u.len() - 1] + sw;
    let mut r = r;
    *r.last_mut().expect("cap is non-empty") = r_switch;

    let polar = RadialProfile::new(Chart::LogPolar, s, u, 0.0)?;
    let cap = RadialProfile::new(Chart::CartesianRadial, r, v, 0.0)?;
    let report = verify_initial_constraints(&polar, k)?;
    if let Some(worst) = report.failures().next() {
        return Err(Error::Construction(format!(
            "initial data violates {} by {:.3e} ({})",
            worst.name,
            worst.max_violation.unwrap_or(f64::NAN),
            worst.note.as_deref().unwrap_or(&worst.region),
        )));
    }
    Ok(InitialProfile { k, polar, cap, clipped_points })
}

/// Largest violation and where it happened.
fn worst(samples: impl Iterator<Item = (f64, f64)>) -> (f64, Option<f64>) {
    samples.fold((f64::NEG_INFINITY, None), |(v, at), (s, d)| if d > v || d.is_nan() { (d, Some(s)) } else { (v, at) })
}

fn entry(name: &str, region: String, samples: impl Iterator<Item = (f64, f64)>) -> ReportEntry {
    let (v, at) = worst(samples);
    match at {
        None => ReportEntry::not_applicable(name, region, "no grid points in region"),
        Some(s) => ReportEntry::measured(name, region, vec![0.0], v, EXACT_TOL).with_note(format!("worst at s = {s:.6}")),
    }
}

/// Margins of the four construction conditions plus the Poincare lower bound.
pub fn verify_initial_constraints(p: &RadialProfile, k: u32) -> Result<VerificationReport> {
    if p.chart() != Chart::LogPolar {
        return Err(Error::Precondition("initial constraints are checked on the log-polar part".into()));
    }
    let barriers: BarrierPair = make_barrier_pair(k)?;
    let kf = f64::from(k);
    let (a, b) = (2.0 * kf, 3.0 * kf);
    let in_band = |s: f64| s >= a && s <= b;
    let mut report = VerificationReport::new(format!("initial data k={k}"));
    report.push(entry(
        "initial equals -ln s",
        format!("s in (0, {a}]"),
        p.iter().filter(|&(s, _)| s <= a).map(|(s, u)| (s, (u + s.ln()).abs())),
    ));
    let upper = p
        .iter()
        .filter(|&(s, _)| s >= a)
        .map(|(s, u)| Ok((s, u - barriers.upper.eval(s, 0.0)?)))
        .collect::<Result<Vec<_>>>()?;
    report.push(entry("initial below upper cigar", format!("s >= {a}"), upper.into_iter()));
    let lower = p
        .iter()
        .filter(|&(s, _)| in_band(s))
        .map(|(s, u)| Ok((s, barriers.lower.eval(s, 0.0)? - u)))
        .collect::<Result<Vec<_>>>()?;
    report.push(entry("initial above lower cigar", format!("s in [{a}, {b}]"), lower.into_iter()));
    let tail = p
        .iter()
        .filter(|&(s, _)| s >= b)
        .map(|(s, u)| Ok((s, (u - barriers.lower.eval(s, 0.0)?).abs())))
        .collect::<Result<Vec<_>>>()?;
    report.push(entry("initial equals lower cigar", format!("s >= {b}"), tail.into_iter()));
    report.push(entry(
        "initial above Poincare",
        "all s".to_string(),
        p.iter().map(|(s, u)| (s, neg_ln_sinh(s) - u)),
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn build(k: u32, blend: Blend) -> InitialProfile {
        let mut spec = InitialDataSpec::new(k);
        spec.blend = blend;
        build_initial_profile(&spec).unwrap()
    }

    #[test]
    fn junction_values() {
        for k in [10u32, 15, 20] {
            let kf = f64::from(k);
            let p = build(k, Blend::Smoothstep);
            assert_relative_eq!(p.polar.value_at(2.0 * kf).unwrap(), -(2.0 * kf).ln(), epsilon = 1e-15);
            let expected = -0.5 * (5.0 * kf * kf).ln() - 0.5 * (1.0 + (2.0 * (2.0 * kf - kf * kf / 10.0)).exp()).ln();
            assert_relative_eq!(p.polar.value_at(3.0 * kf).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn band_is_nonempty_at_two_k() {
        // scan oracle: the lower cigar sits below -ln s which sits below the upper one
        for k in [10u32, 15, 20] {
            let bp = make_barrier_pair(k).unwrap();
            let kf = f64::from(k);
            for i in 0..=1000 {
                let s = 2.0 * kf + kf * i as f64 / 1000.0;
                assert!(bp.lower.eval(s, 0.0).unwrap() <= bp.upper.eval(s, 0.0).unwrap());
            }
            let s = 2.0 * kf;
            assert!(bp.lower.eval(s, 0.0).unwrap() <= -s.ln());
            assert!(-s.ln() <= bp.upper.eval(s, 0.0).unwrap());
        }
    }

    #[test]
    fn constructed_data_passes_with_zero_equality_margins() {
        for k in [10u32, 15, 20, 30] {
            for blend in [Blend::Smoothstep, Blend::ClippedLinear] {
                let p = build(k, blend);
                let r = verify_initial_constraints(&p.polar, k).unwrap();
                assert!(r.all_pass(), "k={k} {blend:?}\n{}", r.render_table());
                assert_eq!(r.get("initial equals -ln s").unwrap().max_violation, Some(0.0));
                assert_eq!(r.get("initial equals lower cigar").unwrap().max_violation, Some(0.0));
            }
        }
    }

    #[test]
    fn poincare_margin_at_two_k() {
        let s = 20.0f64;
        assert!(-s.ln() - neg_ln_sinh(s) > 0.0);
        assert!(s.sinh() > s);
    }

    #[test]
    fn continuity_across_junctions() {
        let p = build(10, Blend::Smoothstep);
        let near = |x: f64| {
            let i = p.polar.coords().iter().position(|&s| s == x).unwrap();
            (p.polar.values()[i - 1], p.polar.values()[i], p.polar.values()[i + 1])
        };
        for x in [20.0, 30.0] {
            let (l, c, r) = near(x);
            assert!(((c - l) - (r - c)).abs() < 5e-3, "{l} {c} {r}");
        }
        // blend endpoints agree with the pieces they join
        assert_eq!(Blend::Smoothstep.weight(0.0), 0.0);
        assert_eq!(Blend::Smoothstep.weight(1.0), 1.0);
    }

    #[test]
    fn corrupted_profile_fails_band_check() {
        let p = build(10, Blend::Smoothstep);
        let mut vals = p.polar.values().to_vec();
        let i = p.polar.coords().iter().position(|&s| s > 29.5).unwrap();
        vals[i] -= 1.0;
        let bad = RadialProfile::new(Chart::LogPolar, p.polar.coords().to_vec(), vals, 0.0).unwrap();
        let r = verify_initial_constraints(&bad, 10).unwrap();
        let e = r.get("initial above lower cigar").unwrap();
        assert!(!e.pass);
        assert!(e.note.as_ref().unwrap().contains(&format!("{:.6}", p.polar.coords()[i])));
    }

    #[test]
    fn cap_matches_interface_and_is_flat_at_origin() {
        let p = build(10, Blend::Smoothstep);
        let sw = default_s_switch(10);
        let u_last = *p.polar.values().last().unwrap();
        assert_eq!(*p.cap.values().last().unwrap(), u_last + sw);
        assert_relative_eq!(*p.cap.coords().last().unwrap(), (-sw).exp());
        let v = p.cap.values();
        assert!((v[1] - v[0]).abs() < 1e-6);
    }

    #[test]
    fn validation_rules() {
        let spec = InitialDataSpec::new(5);
        let err = build_initial_profile(&spec).unwrap_err().to_string();
        assert!(err.contains("k >= 10"), "{err}");
        let mut spec = InitialDataSpec::new(10);
        spec.s_switch = Some(31.0);
        assert!(build_initial_profile(&spec).is_err());
        spec.s_switch = None;
        spec.s_min = 0.5;
        assert!(build_initial_profile(&spec).is_err());
        assert_eq!(default_s_switch(10), 35.0);
        assert_eq!(default_s_switch(30), 130.0);
        assert!("linear".parse::<Blend>().is_err());
    }

    #[test]
    fn point_count_override() {
        let mut spec = InitialDataSpec::new(10);
        spec.n_points = Some(900);
        let p = build_initial_profile(&spec).unwrap();
        assert!(p.polar.len().abs_diff(900) <= 3);
    }
}
