//! Radial grids: a geometrically graded log-polar grid and a uniform cap grid.

use crate::error::{Error, Result};

/// Nodes from `s_min` to `s_end`. Spacing starts at `s_min·(q − 1)`, grows by
/// `q` per cell until it reaches `h_max`, then stays uniform; the last
/// stretch is resized so the final node lands on `s_end`.
pub fn graded_grid(s_min: f64, s_end: f64, h_max: f64, q: f64) -> Result<Vec<f64>> {
    if !(s_min > 0.0 && s_end > s_min && h_max > 0.0 && q >= 1.0) || !s_end.is_finite() {
        return Err(Error::Construction(format!(
            "graded grid needs 0 < s_min < s_end, h_max > 0, q >= 1; got s_min={s_min}, s_end={s_end}, h_max={h_max}, q={q}"
        )));
    }
    let mut nodes = vec![s_min];
    let mut h = if q > 1.0 { (s_min * (q - 1.0)).min(h_max) } else { h_max };
    let mut s = s_min;
    while h < h_max && s + h < s_end {
        s += h;
        nodes.push(s);
        h *= q;
    }
    let rest = s_end - s;
    let cells = (rest / h_max).ceil().max(1.0) as usize;
    let hu = rest / cells as f64;
    for i in 1..cells {
        nodes.push(s + hu * i as f64);
    }
    nodes.push(s_end);
    Ok(nodes)
}

/// Graded grid from `s_min` to the first breakpoint, then uniform stretches of
/// spacing at most `h_max` between consecutive breakpoints, so every
/// breakpoint is a node.
pub fn piecewise_grid(s_min: f64, breaks: &[f64], h_max: f64, q: f64) -> Result<Vec<f64>> {
    let (&first, rest) = breaks
        .split_first()
        .ok_or_else(|| Error::Construction("piecewise grid needs at least one breakpoint".into()))?;
    let mut nodes = graded_grid(s_min, first, h_max, q)?;
    let mut a = first;
    for &b in rest {
        if !(b > a) {
            return Err(Error::Construction(format!("breakpoints must increase, got {a} then {b}")));
        }
        let cells = ((b - a) / h_max).ceil().max(1.0) as usize;
        let h = (b - a) / cells as f64;
        nodes.extend((1..cells).map(|i| a + h * i as f64));
        nodes.push(b);
        a = b;
    }
    Ok(nodes)
}

/// Pick `h_max` by bisection so `build(h_max)` has the node count closest to `n_points`.
pub fn fit_point_count(
    n_points: usize,
    span: f64,
    build: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    if n_points < 3 {
        return Err(Error::Construction(format!("n_points = {n_points} must be at least 3")));
    }
    let (mut lo, mut hi) = (1e-6 * span, span);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if build(mid)?.len() > n_points {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (build(lo)?, build(hi)?);
    let miss = |g: &Vec<f64>| g.len().abs_diff(n_points);
    Ok(if miss(&a) < miss(&b) { a } else { b })
}

/// Uniform nodes `ρ_j = j / m`, `j = 0..=m`, on the unit cap.
pub fn cap_nodes(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Construction(format!("cap needs at least 2 cells, got {m}")));
    }
    Ok((0..=m).map(|j| j as f64 / m as f64).collect())
}

/// Uniform nodes on `[a, b]`.
pub fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { b } else { a + h * i as f64 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_grid_shape() {
        let g = graded_grid(0.05, 35.0, 0.05, 1.05).unwrap();
        assert_eq!(g[0], 0.05);
        assert_eq!(*g.last().unwrap(), 35.0);
        let h: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        assert!((h[0] - 0.0025).abs() < 1e-15);
        assert!(h.iter().all(|&x| x > 0.0 && x <= 0.05 + 1e-12));
        for w in h.windows(2) {
            assert!(w[1] / w[0] <= 1.05 + 1e-9);
        }
    }

    #[test]
    fn ungraded_grid_is_uniform() {
        let g = graded_grid(0.1, 5.0, 0.1, 1.0).unwrap();
        assert_eq!(g.len(), 50);
        assert!(graded_grid(0.0, 5.0, 0.1, 1.05).is_err());
        assert!(graded_grid(1.0, 0.5, 0.1, 1.05).is_err());
    }

    #[test]
    fn count_target_is_met() {
        for n in [200, 500, 1500] {
            let g = fit_point_count(n, 40.0, |h| piecewise_grid(0.05, &[20.0, 30.0, 40.0], h, 1.05)).unwrap();
            assert!(g.len().abs_diff(n) <= 3, "{} vs {n}", g.len());
        }
        assert!(fit_point_count(2, 1.0, |h| graded_grid(0.1, 1.0, h, 1.0)).is_err());
    }

    #[test]
    fn breakpoints_are_nodes() {
        let g = piecewise_grid(0.05, &[20.0, 30.0, 35.0], 0.07, 1.05).unwrap();
        for b in [20.0, 30.0, 35.0] {
            assert!(g.contains(&b));
        }
        assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.07 + 1e-12));
        assert!(piecewise_grid(0.05, &[20.0, 10.0], 0.1, 1.05).is_err());
        assert!(piecewise_grid(0.05, &[], 0.1, 1.05).is_err());
    }

    #[test]
    fn cap_nodes_cover_unit_interval() {
        let c = cap_nodes(20).unwrap();
        assert_eq!(c.len(), 21);
        assert_eq!((c[0], c[20]), (0.0, 1.0));
        assert!(cap_nodes(1).is_err());
    }
}
