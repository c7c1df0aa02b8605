//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.upper[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Solve `A x = rhs` without pivoting. Fails on a vanishing or non-finite pivot.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(Error::Precondition(format!("rhs has length {}, matrix {n}", rhs.len())));
        }
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        for i in 0..n {
            let (sub, prev_c, prev_x) = if i == 0 { (0.0, 0.0, 0.0) } else { (self.lower[i], c[i - 1], x[i - 1]) };
            let pivot = self.diag[i] - sub * prev_c;
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Precondition(format!("singular pivot at row {i}")));
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            x[i] = (rhs[i] - sub * prev_x) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}
