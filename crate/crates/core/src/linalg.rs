//! Small dense linear algebra: LU with partial pivoting.

use crate::error::{Error, Result};

/// LU factorization of a square row-major matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(n: usize, a: &[f64]) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: a.len(),
            });
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            if pivot == 0.0 {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            if pivot_row != k {
                for c in 0..n {
                    lu.swap(k * n + c, pivot_row * n + c);
                }
                perm.swap(k, pivot_row);
            }
            let diag = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / diag;
                lu[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        lu[r * n + c] -= f * lu[k * n + c];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * x[c]).sum();
            x[r] = (x[r] - s) / self.lu[r * n + r];
        }
        x
    }

    /// Explicit inverse, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        let mut inv = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            let col = self.solve(&e);
            for r in 0..n {
                inv[r * n + c] = col[r];
            }
        }
        inv
    }
}

/// Maximum absolute column sum.
pub fn norm_1(n: usize, a: &[f64]) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| a[r * n + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A‖₁ · ‖A⁻¹‖₁`.
pub fn condition_1(n: usize, a: &[f64], lu: &Lu) -> f64 {
    norm_1(n, a) * norm_1(n, &lu.inverse())
}
