//! Exact metrics and soliton flows used as initial data, barriers and oracles.
//!
//! Every variant is evaluated in the log-polar chart by [`ClosedFormMetric::eval`]
//! and in the Cartesian chart by [`ClosedFormMetric::eval_cartesian`]; the two
//! differ by `u = v - s`. [`ClosedFormMetric::jet`] returns analytic time and
//! Laplacian derivatives in the log-polar chart, which lets flow residuals be
//! computed without differencing.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::report::{ReportEntry, VerificationReport};

/// Time dependence of the [`ClosedFormMetric::Scaled`] wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScaleFactor {
    Constant(f64),
    /// `1 + 2t`, the dilation of a hyperbolic metric under the flow.
    Dilating,
}

impl ScaleFactor {
    pub fn at(self, t: f64) -> f64 {
        match self {
            ScaleFactor::Constant(c) => c,
            ScaleFactor::Dilating => 1.0 + 2.0 * t,
        }
    }

    /// `d/dt (½ ln c(t))`
    fn half_log_rate(self, t: f64) -> f64 {
        match self {
            ScaleFactor::Constant(_) => 0.0,
            ScaleFactor::Dilating => 1.0 / (1.0 + 2.0 * t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClosedFormMetric {
    /// Complete hyperbolic metric on the disc, `u = -ln sinh s`.
    Poincare,
    /// Complete hyperbolic metric on the punctured disc, `u = -ln s`.
    HyperbolicPunctured,
    /// Complete hyperbolic metric on the annulus `ε < |z| < 1`.
    HyperbolicAnnulus { eps: f64 },
    /// Scaled, translated cigar soliton flow
    /// `u = -½ln λ - ½ln(1 + e^{2(s - shift + 2λt)})`.
    CigarSoliton { lambda: f64, shift: f64 },
    /// Cartesian factor `w = -ln(ρ² - r²) + ½ln(α + 2t)` on `|z| < ρ`.
    /// It solves the flow exactly when `ρ = ½`.
    ExpandingDiscBarrier { rho: f64, alpha: f64 },
    /// Static `l = -ln(s + δ) - ½ln 10`, with `e^{-2l} l_ss = 10`.
    ShiftedLogSubsolution { delta: f64 },
    Scaled { base: Box<ClosedFormMetric>, factor: ScaleFactor },
}

/// Value with its analytic time derivative, log-polar Laplacian `u_ss` and
/// the flow speed `e^{-2u} u_ss` (kept separately since the product of the
/// two factors over- or underflows deep in a cigar tail).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub laplacian: f64,
    pub speed: f64,
}

impl Jet {
    /// `u_t - e^{-2u} u_ss`; negative for subsolutions.
    pub fn flow_residual(&self) -> f64 {
        self.dt - self.speed
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `e^x / (1 + e^x)` without overflow.
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Unscaled cigar `C(s) = -½ ln(1 + e^{2s})`.
pub fn cigar(s: f64) -> f64 {
    -0.5 * softplus(2.0 * s)
}

/// Scaled cigar `C_λ(s) = -½ ln λ + C(s)`.
pub fn cigar_scaled(lambda: f64, s: f64) -> f64 {
    -0.5 * lambda.ln() + cigar(s)
}

/// `-ln sinh s`, stable for large `s`.
pub fn neg_ln_sinh(s: f64) -> f64 {
    -s + LN_2 - (-(-2.0 * s).exp()).ln_1p()
}

impl ClosedFormMetric {
    pub fn hyperbolic_annulus(eps: f64) -> Result<Self> {
        let m = ClosedFormMetric::HyperbolicAnnulus { eps };
        m.validate()?;
        Ok(m)
    }

    pub fn cigar(lambda: f64, shift: f64) -> Result<Self> {
        let m = ClosedFormMetric::CigarSoliton { lambda, shift };
        m.validate()?;
        Ok(m)
    }

    pub fn expanding_disc(rho: f64, alpha: f64) -> Result<Self> {
        let m = ClosedFormMetric::ExpandingDiscBarrier { rho, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn shifted_log(delta: f64) -> Result<Self> {
        let m = ClosedFormMetric::ShiftedLogSubsolution { delta };
        m.validate()?;
        Ok(m)
    }

    pub fn scaled(self, factor: ScaleFactor) -> Result<Self> {
        let m = ClosedFormMetric::Scaled { base: Box::new(self), factor };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Construction(msg));
        match self {
            ClosedFormMetric::Poincare | ClosedFormMetric::HyperbolicPunctured => Ok(()),
            ClosedFormMetric::HyperbolicAnnulus { eps } => {
                if *eps > 0.0 && *eps < 1.0 {
                    Ok(())
                } else {
                    bad(format!("annulus parameter eps = {eps} must lie in (0, 1)"))
                }
            }
            ClosedFormMetric::CigarSoliton { lambda, shift } => {
                if *lambda > 0.0 && lambda.is_finite() && shift.is_finite() {
                    Ok(())
                } else {
                    bad(format!("cigar needs lambda > 0 and finite shift, got ({lambda}, {shift})"))
                }
            }
            ClosedFormMetric::ExpandingDiscBarrier { rho, alpha } => {
                if *rho > 0.0 && *alpha >= 1.0 {
                    Ok(())
                } else {
                    bad(format!("expanding disc needs rho > 0 and alpha >= 1, got ({rho}, {alpha})"))
                }
            }
            ClosedFormMetric::ShiftedLogSubsolution { delta } => {
                if *delta > 0.0 {
                    Ok(())
                } else {
                    bad(format!("shifted log needs delta > 0, got {delta}"))
                }
            }
            ClosedFormMetric::Scaled { base, factor } => {
                if let ScaleFactor::Constant(c) = factor {
                    if !(*c > 0.0) {
                        return bad(format!("scale factor {c} must be positive"));
                    }
                }
                base.validate()
            }
        }
    }

    fn check_time(t: f64) -> Result<()> {
        if t >= 0.0 && t.is_finite() {
            Ok(())
        } else {
            domain(format!("time {t} must be finite and non-negative"))
        }
    }

    /// Log-polar conformal factor at `(s, t)`.
    pub fn eval(&self, s: f64, t: f64) -> Result<f64> {
        Ok(self.jet(s, t)?.value)
    }

    /// Value, time derivative and `u_ss` at `(s, t)` in the log-polar chart.
    pub fn jet(&self, s: f64, t: f64) -> Result<Jet> {
        self.validate()?;
        Self::check_time(t)?;
        if s.is_nan() {
            return domain("coordinate is NaN");
        }
        let need_positive = |s: f64| {
            if s > 0.0 && s.is_finite() {
                Ok(())
            } else {
                domain(format!("s = {s} outside (0, ∞)"))
            }
        };
        match self {
            ClosedFormMetric::Poincare => {
                need_positive(s)?;
                let sh = s.sinh();
                Ok(Jet { value: neg_ln_sinh(s), dt: 0.0, laplacian: 1.0 / (sh * sh), speed: 1.0 })
            }
            ClosedFormMetric::HyperbolicPunctured => {
                need_positive(s)?;
                Ok(Jet { value: -s.ln(), dt: 0.0, laplacian: 1.0 / (s * s), speed: 1.0 })
            }
            ClosedFormMetric::HyperbolicAnnulus { eps } => {
                let width = -eps.ln();
                if !(s > 0.0 && s < width) {
                    return domain(format!("s = {s} outside (0, {width})"));
                }
                let arg = s * PI / width;
                let sn = arg.sin();
                let w = PI / width;
                Ok(Jet {
                    value: -((width / PI) * sn).ln(),
                    dt: 0.0,
                    laplacian: w * w / (sn * sn),
                    speed: 1.0,
                })
            }
            ClosedFormMetric::CigarSoliton { lambda, shift } => {
                if s.is_infinite() {
                    return domain("cigar is evaluated at finite s; use eval_cartesian at the origin");
                }
                let y = s - shift + 2.0 * lambda * t;
                let sigma = logistic(2.0 * y);
                let rest = logistic(-2.0 * y);
                Ok(Jet {
                    value: -0.5 * lambda.ln() + cigar(y),
                    dt: -2.0 * lambda * sigma,
                    laplacian: -2.0 * sigma * rest,
                    speed: -2.0 * lambda * sigma,
                })
            }
            ClosedFormMetric::ExpandingDiscBarrier { rho, alpha } => {
                if s.is_infinite() {
                    return domain("use eval_cartesian at the origin");
                }
                let r = (-s).exp();
                if !(r < *rho) {
                    return domain(format!("r = e^(-{s}) outside [0, {rho})"));
                }
                let gap = rho * rho - r * r;
                // u_ss = r² Δ_r w
                Ok(Jet {
                    value: -gap.ln() + 0.5 * (alpha + 2.0 * t).ln() - s,
                    dt: 1.0 / (alpha + 2.0 * t),
                    laplacian: r * r * 4.0 * rho * rho / (gap * gap),
                    speed: 4.0 * rho * rho / (alpha + 2.0 * t),
                })
            }
            ClosedFormMetric::ShiftedLogSubsolution { delta } => {
                let x = s + delta;
                if !(x > 0.0 && x.is_finite()) {
                    return domain(format!("s = {s} outside (-{delta}, ∞)"));
                }
                Ok(Jet { value: -x.ln() - 0.5 * 10f64.ln(), dt: 0.0, laplacian: 1.0 / (x * x), speed: 10.0 })
            }
            ClosedFormMetric::Scaled { base, factor } => {
                let j = base.jet(s, t)?;
                Ok(Jet {
                    value: j.value + 0.5 * factor.at(t).ln(),
                    dt: j.dt + factor.half_log_rate(t),
                    laplacian: j.laplacian,
                    speed: j.speed / factor.at(t),
                })
            }
        }
    }

    /// Cartesian conformal factor `v` at radius `r ≥ 0`, including the origin
    /// for metrics that are smooth there.
    pub fn eval_cartesian(&self, r: f64, t: f64) -> Result<f64> {
        self.validate()?;
        Self::check_time(t)?;
        if !(r >= 0.0) || !r.is_finite() {
            return domain(format!("radius {r} must be finite and non-negative"));
        }
        match self {
            ClosedFormMetric::CigarSoliton { lambda, shift } if r == 0.0 => {
                // v = -½ln λ - ½ln(r² + e^{-2c}) with c = shift - 2λt
                Ok(-0.5 * lambda.ln() + shift - 2.0 * lambda * t)
            }
            ClosedFormMetric::ExpandingDiscBarrier { rho, alpha } => {
                if r >= *rho {
                    return domain(format!("r = {r} outside [0, {rho})"));
                }
                Ok(-(rho * rho - r * r).ln() + 0.5 * (alpha + 2.0 * t).ln())
            }
            ClosedFormMetric::Scaled { base, factor } if r == 0.0 => {
                Ok(base.eval_cartesian(0.0, t)? + 0.5 * factor.at(t).ln())
            }
            _ if r == 0.0 => domain(format!("{} is not defined at the origin", self.name())),
            _ => {
                let s = -r.ln();
                Ok(self.eval(s, t)? + s)
            }
        }
    }

    /// Config-file variant name.
    pub fn name(&self) -> &'static str {
        match self {
            ClosedFormMetric::Poincare => "poincare",
            ClosedFormMetric::HyperbolicPunctured => "hyp_punctured",
            ClosedFormMetric::HyperbolicAnnulus { .. } => "hyp_annulus",
            ClosedFormMetric::CigarSoliton { .. } => "cigar",
            ClosedFormMetric::ExpandingDiscBarrier { .. } => "expanding_disc",
            ClosedFormMetric::ShiftedLogSubsolution { .. } => "shifted_log",
            ClosedFormMetric::Scaled { .. } => "scaled",
        }
    }

    /// Build from a config-file name and positional parameter list.
    pub fn from_name_params(name: &str, params: &[f64]) -> Result<Self> {
        let arity = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "metric {name:?} takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        match name {
            "poincare" => arity(0).map(|_| ClosedFormMetric::Poincare),
            "hyp_punctured" => arity(0).map(|_| ClosedFormMetric::HyperbolicPunctured),
            "hyp_annulus" => {
                arity(1)?;
                Self::hyperbolic_annulus(params[0])
            }
            "cigar" => {
                arity(2)?;
                Self::cigar(params[0], params[1])
            }
            "expanding_disc" => {
                arity(2)?;
                Self::expanding_disc(params[0], params[1])
            }
            "shifted_log" => {
                arity(1)?;
                Self::shifted_log(params[0])
            }
            other => Err(Error::Config(format!(
                "unknown metric {other:?}; expected one of poincare, hyp_punctured, hyp_annulus, cigar, expanding_disc, shifted_log"
            ))),
        }
    }
}

/// Upper and lower cigar barriers for one member of the sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct BarrierPair {
    pub k: u32,
    pub upper: ClosedFormMetric,
    pub lower: ClosedFormMetric,
}

impl BarrierPair {
    /// Both cigars share the translation `k + k²/10`; the upper one has
    /// `λ = k²/10`, so at `t = ½` it is centred at `s = k`, and the lower one
    /// has `λ = 5k²`, which puts its supremum below `-ln(2k)`.
    pub fn new(k: u32) -> Result<Self> {
        if k < 1 {
            return Err(Error::Construction(format!("barrier index k = {k} must be at least 1")));
        }
        let kf = f64::from(k);
        let shift = kf + kf * kf / 10.0;
        Ok(Self {
            k,
            upper: ClosedFormMetric::cigar(kf * kf / 10.0, shift)?,
            lower: ClosedFormMetric::cigar(5.0 * kf * kf, shift)?,
        })
    }

    pub fn shift(&self) -> f64 {
        let kf = f64::from(self.k);
        kf + kf * kf / 10.0
    }

    /// `sup_s C_k^lower(s, 0) = -½ ln(5k²)`, approached as `s → -∞`.
    pub fn lower_sup_at_zero(&self) -> f64 {
        let kf = f64::from(self.k);
        -0.5 * (5.0 * kf * kf).ln()
    }
}

pub fn make_barrier_pair(k: u32) -> Result<BarrierPair> {
    BarrierPair::new(k)
}

/// Sample-based check of the elementary cigar properties on `grid` (values of
/// `s`, evaluated at `t = 0` after removing the translation `shift`).
pub fn cigar_properties_check(lambda: f64, shift: f64, grid: &[f64]) -> Result<VerificationReport> {
    let metric = ClosedFormMetric::cigar(lambda, shift)?;
    let tol = 1e-12;
    let offset = -0.5 * lambda.ln();
    let samples = grid
        .iter()
        .map(|&s| Ok((s - shift, metric.eval(s, 0.0)? - offset)))
        .collect::<Result<Vec<_>>>()?;

    let sup_violation = samples.iter().map(|&(_, c)| c).fold(f64::NEG_INFINITY, f64::max);
    let monotone_violation = samples
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let below_line = samples.iter().map(|&(x, c)| c + x).fold(f64::NEG_INFINITY, f64::max);
    let above_line = samples
        .iter()
        .filter(|&&(x, _)| x >= 0.0)
        .map(|&(x, c)| -0.5 * LN_2 - x - c)
        .fold(f64::NEG_INFINITY, f64::max);

    let region = format!("s - {shift} in sampled grid ({} points)", grid.len());
    let mut report = VerificationReport::new(format!("cigar(lambda={lambda}, shift={shift})"));
    report.push(ReportEntry::measured("cigar sup <= -ln(lambda)/2", &region, vec![0.0], sup_violation, tol));
    report.push(ReportEntry::measured("cigar decreasing", &region, vec![0.0], monotone_violation, tol));
    report.push(ReportEntry::measured("cigar C(x) <= -x", &region, vec![0.0], below_line, tol));
    report.push(ReportEntry::measured("cigar C(x) >= -ln2/2 - x for x >= 0", &region, vec![0.0], above_line, tol));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cigar_at_origin_is_minus_half_ln_two() {
        let c = ClosedFormMetric::cigar(1.0, 0.0).unwrap();
        assert_relative_eq!(c.eval(0.0, 0.0).unwrap(), -0.5 * LN_2, epsilon = 1e-15);
        assert_relative_eq!(cigar(0.0), -0.5 * LN_2, epsilon = 1e-15);
    }

    #[test]
    fn unit_cigar_matches_definition() {
        let c = ClosedFormMetric::cigar(1.0, 0.0).unwrap();
        for s in [-30.0, -2.0, 0.3, 5.0, 40.0] {
            let direct = -0.5 * (1.0 + (2.0f64 * s).exp()).ln();
            assert_relative_eq!(c.eval(s, 0.0).unwrap(), direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn annulus_with_eps_e_minus_2k() {
        let m = ClosedFormMetric::hyperbolic_annulus((-2.0f64).exp()).unwrap();
        assert_relative_eq!(m.eval(1.0, 0.0).unwrap(), (PI / 2.0).ln(), epsilon = 1e-14);
        let k = 5.0f64;
        let m = ClosedFormMetric::hyperbolic_annulus((-2.0 * k).exp()).unwrap();
        for s in [0.1, 3.0, 9.5] {
            let expected = -((2.0 * k / PI) * (s * PI / (2.0 * k)).sin()).ln();
            assert_relative_eq!(m.eval(s, 0.0).unwrap(), expected, epsilon = 1e-12);
        }
        assert!(m.eval(10.5, 0.0).is_err());
        assert!(matches!(ClosedFormMetric::hyperbolic_annulus(1.0), Err(Error::Construction(_))));
        assert!(ClosedFormMetric::HyperbolicAnnulus { eps: 0.0 }.eval(0.5, 0.0).is_err());
    }

    #[test]
    fn poincare_vanishes_where_sinh_is_one() {
        let s = (1.0 + 2f64.sqrt()).ln();
        assert_relative_eq!(s.sinh(), 1.0, epsilon = 1e-15);
        assert!(ClosedFormMetric::Poincare.eval(s, 0.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(neg_ln_sinh(400.0), -400.0 + LN_2, epsilon = 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(ClosedFormMetric::Poincare.eval(0.0, 0.0).is_err());
        assert!(ClosedFormMetric::HyperbolicPunctured.eval(-1.0, 0.0).is_err());
        assert!(ClosedFormMetric::HyperbolicPunctured.eval(1.0, -1.0).is_err());
        assert!(ClosedFormMetric::shifted_log(0.1).unwrap().eval(-0.2, 0.0).is_err());
        assert!(ClosedFormMetric::HyperbolicPunctured.eval_cartesian(0.0, 0.0).is_err());
        assert!(ClosedFormMetric::expanding_disc(0.5, 1.0).unwrap().eval_cartesian(0.6, 0.0).is_err());
        assert!(ClosedFormMetric::expanding_disc(0.5, 0.5).is_err());
    }

    #[test]
    fn barrier_pair_exact_values() {
        let bp = make_barrier_pair(10).unwrap();
        assert_relative_eq!(
            bp.upper.eval(10.0, 0.5).unwrap(),
            0.5 * 5f64.ln() - 10f64.ln(),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            bp.lower.eval(10.0, 0.01).unwrap(),
            -10f64.ln() - 0.5 * 10f64.ln(),
            epsilon = 1e-12
        );
        for k in [1, 2, 10, 15, 20, 30, 100] {
            let bp = make_barrier_pair(k).unwrap();
            let kf = f64::from(k);
            assert_relative_eq!(bp.upper.eval(kf, 0.5).unwrap(), 0.5 * 5f64.ln() - kf.ln(), epsilon = 1e-12);
            assert!(bp.lower_sup_at_zero() <= -(2.0 * kf).ln());
            // sup is approached from below far to the left
            let far = bp.lower.eval(-50.0, 0.0).unwrap();
            assert!(far <= bp.lower_sup_at_zero() && bp.lower_sup_at_zero() - far < 1e-12);
        }
        assert!(matches!(make_barrier_pair(0), Err(Error::Construction(_))));
    }

    #[test]
    fn lower_cigar_at_three_k() {
        let k = 10.0f64;
        let bp = make_barrier_pair(10).unwrap();
        let expected = -0.5 * (5.0 * k * k).ln() - 0.5 * (1.0 + 20f64.exp()).ln();
        assert_relative_eq!(bp.lower.eval(3.0 * k, 0.0).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn unit_cigar_properties_hold_on_symmetric_grid() {
        let grid: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let report = cigar_properties_check(1.0, 0.0, &grid).unwrap();
        assert!(report.all_pass(), "{}", report.render_table());
        assert_eq!(report.entries.len(), 4);
        // equality in the last property at x = 0
        assert!(report.entries[3].max_violation.unwrap().abs() < 1e-15);
        // C(0) = -ln2/2 <= 0 with margin ln2/2
        let c0 = cigar(0.0);
        assert_relative_eq!(-(c0 + 0.0), 0.5 * LN_2, epsilon = 1e-15);
        let scaled = cigar_properties_check(37.0, 4.0, &grid).unwrap();
        assert!(scaled.all_pass());
    }

    #[test]
    fn soliton_translation_identity() {
        let (lam, shift) = (2.5, 1.0);
        let m = ClosedFormMetric::cigar(lam, shift).unwrap();
        for &(s, t, d) in &[(0.0, 0.0, 0.3), (-3.0, 1.2, 0.01), (4.0, 0.5, 2.0)] {
            let moved = ClosedFormMetric::cigar(lam, shift - 2.0 * lam * d).unwrap();
            assert_relative_eq!(m.eval(s, t + d).unwrap(), moved.eval(s, t).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn hyperbolic_ordering() {
        for eps in [(-2.0f64).exp(), (-6.0f64).exp(), (-20.0f64).exp()] {
            let ann = ClosedFormMetric::hyperbolic_annulus(eps).unwrap();
            let width = -eps.ln();
            for i in 1..200 {
                let s = width * i as f64 / 200.0;
                let p = ClosedFormMetric::Poincare.eval(s, 0.0).unwrap();
                let h = ClosedFormMetric::HyperbolicPunctured.eval(s, 0.0).unwrap();
                let a = ann.eval(s, 0.0).unwrap();
                assert!(p <= h && h <= a, "eps={eps} s={s}: {p} {h} {a}");
            }
        }
    }

    #[test]
    fn exact_flows_have_zero_residual() {
        let flows = [
            ClosedFormMetric::cigar(1.0, 0.0).unwrap(),
            ClosedFormMetric::cigar(500.0, 3.0).unwrap(),
            ClosedFormMetric::HyperbolicPunctured.scaled(ScaleFactor::Dilating).unwrap(),
            ClosedFormMetric::Poincare.scaled(ScaleFactor::Dilating).unwrap(),
            ClosedFormMetric::hyperbolic_annulus(0.01).unwrap().scaled(ScaleFactor::Dilating).unwrap(),
            ClosedFormMetric::expanding_disc(0.5, 3.0).unwrap(),
        ];
        for m in &flows {
            for &(s, t) in &[(0.9, 0.0), (1.7, 0.3), (2.5, 1.0)] {
                let j = m.jet(s, t).unwrap();
                let scale = j.dt.abs().max(1.0);
                assert!(j.flow_residual().abs() < 1e-12 * scale, "{m:?} at ({s},{t}): {}", j.flow_residual());
            }
        }
    }

    #[test]
    fn speed_matches_product_where_representable() {
        let cases = [
            ClosedFormMetric::Poincare,
            ClosedFormMetric::hyperbolic_annulus(0.05).unwrap(),
            ClosedFormMetric::cigar(7.0, 1.0).unwrap(),
            ClosedFormMetric::expanding_disc(0.8, 2.0).unwrap(),
            ClosedFormMetric::HyperbolicPunctured.scaled(ScaleFactor::Constant(3.0)).unwrap(),
        ];
        for m in &cases {
            for s in [0.4, 1.3, 2.9] {
                let j = m.jet(s, 0.2).unwrap();
                let product = (-2.0 * j.value).exp() * j.laplacian;
                assert_relative_eq!(j.speed, product, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn shifted_log_is_strict_subsolution() {
        let l = ClosedFormMetric::shifted_log(0.05).unwrap();
        for s in [-0.04, 0.0, 1.0, 10.0, 30.0] {
            let j = l.jet(s, 0.0).unwrap();
            assert_relative_eq!((-2.0 * j.value).exp() * j.laplacian, 10.0, max_relative = 1e-13);
            assert_eq!(j.flow_residual(), -10.0);
        }
    }

    #[test]
    fn cartesian_and_polar_agree() {
        let c = ClosedFormMetric::cigar(3.0, 2.0).unwrap();
        for r in [1e-6, 0.01, 0.5] {
            let s = -f64::ln(r);
            assert_relative_eq!(c.eval_cartesian(r, 0.1).unwrap(), c.eval(s, 0.1).unwrap() + s, epsilon = 1e-12);
        }
        // limit at the origin
        let near = c.eval_cartesian(1e-12, 0.1).unwrap();
        assert_relative_eq!(c.eval_cartesian(0.0, 0.1).unwrap(), near, epsilon = 1e-9);
        let w = ClosedFormMetric::expanding_disc(0.5, 1.0).unwrap();
        assert_relative_eq!(w.eval_cartesian(0.25, 0.0).unwrap(), (16.0f64 / 3.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn names_round_trip() {
        let cases = [
            ("poincare", vec![]),
            ("hyp_punctured", vec![]),
            ("hyp_annulus", vec![0.1]),
            ("cigar", vec![2.0, 1.0]),
            ("expanding_disc", vec![0.5, 2.0]),
            ("shifted_log", vec![0.01]),
        ];
        for (name, params) in cases {
            let m = ClosedFormMetric::from_name_params(name, &params).unwrap();
            assert_eq!(m.name(), name);
        }
        assert!(ClosedFormMetric::from_name_params("cigar", &[1.0]).is_err());
        assert!(ClosedFormMetric::from_name_params("bulb", &[]).is_err());
    }
}
