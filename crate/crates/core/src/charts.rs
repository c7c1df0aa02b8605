//! Coordinate charts on the disc and the punctured disc.
//!
//! Two charts are used throughout. `LogPolar` has coordinate `s` with
//! `z = e^{-(s + iθ)}`, so `s → 0` is the unit circle and `s → ∞` the origin;
//! a metric is `e^{2u}(ds² + dθ²)`. `CartesianRadial` has `r = |z|` and the
//! metric is `e^{2v}|dz|²`. The factors are related by `u(s) = v(e^{-s}) - s`.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chart {
    LogPolar,
    CartesianRadial,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::LogPolar => "log_polar",
            Chart::CartesianRadial => "cartesian_radial",
        }
    }

    pub fn other(self) -> Chart {
        match self {
            Chart::LogPolar => Chart::CartesianRadial,
            Chart::CartesianRadial => Chart::LogPolar,
        }
    }
}

impl FromStr for Chart {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "log_polar" => Ok(Chart::LogPolar),
            "cartesian_radial" => Ok(Chart::CartesianRadial),
            other => Err(Error::Config(format!("unknown chart tag {other:?}"))),
        }
    }
}

/// Log-polar coordinate of the circle of radius `r`.
pub fn s_from_r(r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return domain(format!("radius {r} outside (0, 1]"));
    }
    Ok(-r.ln())
}

pub fn r_from_s(s: f64) -> Result<f64> {
    if !(s >= 0.0) || s.is_infinite() {
        return domain(format!("log-polar coordinate {s} outside [0, ∞)"));
    }
    Ok((-s).exp())
}

/// Conformal factor sampled on a radial grid at a fixed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    chart: Chart,
    coords: Vec<f64>,
    values: Vec<f64>,
    time: f64,
}

impl RadialProfile {
    pub fn new(chart: Chart, coords: Vec<f64>, values: Vec<f64>, time: f64) -> Result<Self> {
        if coords.len() != values.len() {
            return Err(Error::Construction(format!(
                "{} coordinates but {} values",
                coords.len(),
                values.len()
            )));
        }
        if coords.is_empty() {
            return Err(Error::Construction("empty profile".into()));
        }
        if !(time >= 0.0) || !time.is_finite() {
            return Err(Error::Construction(format!("invalid time {time}")));
        }
        if let Some(w) = coords.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::Construction(format!(
                "coordinates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(i) = coords.iter().chain(&values).position(|x| !x.is_finite()) {
            return Err(Error::Construction(format!("non-finite sample at position {i}")));
        }
        if chart == Chart::CartesianRadial && coords[0] < 0.0 {
            return Err(Error::Construction("negative radius in profile".into()));
        }
        Ok(Self { chart, coords, values, time })
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + ExactSizeIterator + '_ {
        self.coords.iter().copied().zip(self.values.iter().copied())
    }

    /// Piecewise-linear interpolation; `None` outside the grid.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let xs = &self.coords;
        if x < xs[0] || x > xs[xs.len() - 1] {
            return None;
        }
        let j = xs.partition_point(|&c| c <= x);
        if j == 0 {
            return Some(self.values[0]);
        }
        if j == xs.len() {
            return Some(self.values[xs.len() - 1]);
        }
        let (x0, x1) = (xs[j - 1], xs[j]);
        let w = (x - x0) / (x1 - x0);
        Some(self.values[j - 1] * (1.0 - w) + self.values[j] * w)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["chart", "time"])?;
        w.write_record([self.chart.name().to_string(), fmt17(self.time)])?;
        w.write_record(["coord", "value"])?;
        for (x, v) in self.iter() {
            w.write_record([fmt17(x), fmt17(v)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let mut records = r.records();
        let mut next = |what: &str| -> Result<csv::StringRecord> {
            records
                .next()
                .ok_or_else(|| Error::Construction(format!("profile csv truncated before {what}")))?
                .map_err(Error::from)
        };
        let header = next("header")?;
        if header.iter().collect::<Vec<_>>() != ["chart", "time"] {
            return Err(Error::Construction("profile csv must start with 'chart,time'".into()));
        }
        let meta = next("chart/time row")?;
        let chart: Chart = meta.get(0).unwrap_or_default().parse()?;
        let time = parse_f64(meta.get(1).unwrap_or_default())?;
        let cols = next("column header")?;
        if cols.iter().collect::<Vec<_>>() != ["coord", "value"] {
            return Err(Error::Construction("profile csv missing 'coord,value' header".into()));
        }
        let mut coords = Vec::new();
        let mut values = Vec::new();
        for rec in records {
            let rec = rec?;
            coords.push(parse_f64(rec.get(0).unwrap_or_default())?);
            values.push(parse_f64(rec.get(1).unwrap_or_default())?);
        }
        Self::new(chart, coords, values, time)
    }
}

/// 17 significant digits, enough for an exact f64 round trip.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Construction(format!("bad number {s:?}: {e}")))
}

/// Resample a profile into the other chart on the image grid.
///
/// LogPolar → CartesianRadial maps `s ↦ e^{-s}` (grid order reversed) and
/// adds `s` to the values; the reverse subtracts it.
pub fn convert_profile(p: &RadialProfile, target: Chart) -> Result<RadialProfile> {
    if target == p.chart {
        return Err(Error::Precondition(format!(
            "profile is already in the {} chart",
            target.name()
        )));
    }
    let n = p.len();
    let mut coords = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    match target {
        Chart::CartesianRadial => {
            for (s, u) in p.iter().rev() {
                coords.push(r_from_s(s)?);
                values.push(u + s);
            }
        }
        Chart::LogPolar => {
            if p.coords[0] <= 0.0 {
                return domain("grid contains r = 0, which has no log-polar coordinate");
            }
            for (r, v) in p.iter().rev() {
                let s = s_from_r(r)?;
                coords.push(s);
                values.push(v - s);
            }
        }
    }
    RadialProfile::new(target, coords, values, p.time)
}

/// Three-point weights `(a, b, c)` for the second derivative at a node with
/// left spacing `hm` and right spacing `hp`.
pub(crate) fn second_diff_weights(hm: f64, hp: f64) -> (f64, f64, f64) {
    let a = 2.0 / (hm * (hm + hp));
    let c = 2.0 / (hp * (hm + hp));
    (a, -(a + c), c)
}

/// Three-point weights for the first derivative on an unequal stencil.
pub(crate) fn first_diff_weights(hm: f64, hp: f64) -> (f64, f64, f64) {
    let d = hm * hp * (hm + hp);
    (-hp * hp / d, (hp * hp - hm * hm) / d, hm * hm / d)
}

/// Discrete curvature at one node with a bound on its floating-point rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSample {
    pub coord: f64,
    pub k: f64,
    /// `e^{-2w} ε Σ|weights| max|w|`: where this exceeds the quantity of
    /// interest the sampled values cannot resolve the curvature.
    pub rounding: f64,
}

fn sample(coord: f64, w: f64, weights: &[f64], values: &[f64]) -> CurvatureSample {
    let lap: f64 = weights.iter().zip(values).map(|(a, v)| a * v).sum();
    let mag = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread: f64 = weights.iter().map(|a| a.abs()).sum();
    let e = (-2.0 * w).exp();
    CurvatureSample { coord, k: -e * lap, rounding: e * f64::EPSILON * spread * mag }
}

/// Gauss curvature `K = -e^{-2w} Δw` at the interior nodes, as `(coord, K)`.
///
/// In the CartesianRadial chart a node at `r = 0` is treated as interior
/// through the reflected ghost value `v(-h) = v(h)`, giving `Δv = 4(v₁-v₀)/h²`.
/// Radii are rescaled by the outermost radius before differencing so tiny caps
/// do not overflow.
pub fn gauss_curvature(p: &RadialProfile) -> Result<Vec<(f64, f64)>> {
    Ok(curvature_samples(p)?.into_iter().map(|c| (c.coord, c.k)).collect())
}

/// [`gauss_curvature`] with per-node rounding bounds.
pub fn curvature_samples(p: &RadialProfile) -> Result<Vec<CurvatureSample>> {
    let n = p.len();
    if n < 3 {
        return domain(format!("curvature needs at least 3 grid points, got {n}"));
    }
    let xs = p.coords();
    let ws = p.values();
    let mut out = Vec::with_capacity(n);
    match p.chart() {
        Chart::LogPolar => {
            for i in 1..n - 1 {
                let (a, b, c) = second_diff_weights(xs[i] - xs[i - 1], xs[i + 1] - xs[i]);
                out.push(sample(xs[i], ws[i], &[a, b, c], &ws[i - 1..=i + 1]));
            }
        }
        Chart::CartesianRadial => {
            let scale = xs[n - 1];
            let shift = scale.ln();
            let rho = |i: usize| xs[i] / scale;
            let w = |i: usize| ws[i] + shift;
            if xs[0] == 0.0 {
                let h = rho(1);
                let q = 4.0 / (h * h);
                out.push(sample(0.0, w(0), &[-q, q], &[w(0), w(1)]));
            }
            for i in 1..n - 1 {
                let (hm, hp) = (rho(i) - rho(i - 1), rho(i + 1) - rho(i));
                let (a2, b2, c2) = second_diff_weights(hm, hp);
                let (a1, b1, c1) = first_diff_weights(hm, hp);
                let r = rho(i);
                let weights = [a2 + a1 / r, b2 + b1 / r, c2 + c1 / r];
                out.push(sample(xs[i], w(i), &weights, &[w(i - 1), w(i), w(i + 1)]));
            }
        }
    }
    Ok(out)
}
