//! 1-Wasserstein distance between expansion weight vectors.
//!
//! Three estimators are provided:
//!
//! * [`w1_integral`] integrates `|Σ (p_n − q_n) F_n(x)|` over the basis support.
//!   This is the reference value.
//! * [`w1_vectorized`] moves the absolute value outside the integral and splits
//!   the difference by sign: `| ‖F·B·Δ‖₁ − ‖F·(I−B)·Δ‖₁ |`. It never exceeds
//!   the integral form and matches it when one distribution function
//!   dominates the other everywhere.
//! * [`w1_empirical`] couples two sample sets through their quantile functions.

use crate::basis::{Basis, WeightVector};
use crate::error::{check_len, Error, Result};
use crate::quadrature::{TrapezoidGrid, DEFAULT_GRID_POINTS};

/// Diagonal of `B`: `true` where `p_n − q_n ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignSplit {
    b: Vec<bool>,
}

impl SignSplit {
    pub fn new(p: &[f64], q: &[f64]) -> Result<Self> {
        check_len(p.len(), q.len())?;
        Ok(Self {
            b: p.iter().zip(q).map(|(a, b)| a - b >= 0.0).collect(),
        })
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.b
    }
}

/// `a_n = ∫_𝐌 F_n(x) dx` for every component.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfIntegrals {
    a: Vec<f64>,
}

impl CdfIntegrals {
    pub fn as_slice(&self) -> &[f64] {
        &self.a
    }

    fn validate(self) -> Result<Self> {
        if self.a.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invariant("cdf integrals must be positive"));
        }
        if self.a.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invariant("cdf integrals must be strictly decreasing"));
        }
        Ok(self)
    }
}

/// Per-basis tables of component CDF values on the quadrature grid.
///
/// Built once and then read-only, so one evaluator can serve many weight pairs.
#[derive(Debug, Clone)]
pub struct W1Evaluator {
    n_components: usize,
    grid: TrapezoidGrid,
    // row-major: cdf[n * grid_len + k] = F_n(x_k)
    cdf: Vec<f64>,
    integrals: CdfIntegrals,
}

impl W1Evaluator {
    pub fn new(basis: &Basis, grid_points: usize) -> Result<Self> {
        let grid = basis.grid(grid_points)?;
        let n = basis.n_components();
        let g = grid.len();
        let mut cdf = Vec::with_capacity(n * g);
        for comp in 0..n {
            cdf.extend(grid.nodes().iter().map(|&x| basis.component_cdf(comp, x)));
        }
        let a = (0..n)
            .map(|comp| grid.integrate_values(&cdf[comp * g..(comp + 1) * g]))
            .collect();
        let integrals = CdfIntegrals { a }.validate()?;
        Ok(Self {
            n_components: n,
            grid,
            cdf,
            integrals,
        })
    }

    pub fn with_default_grid(basis: &Basis) -> Result<Self> {
        Self::new(basis, DEFAULT_GRID_POINTS)
    }

    pub fn cdf_integrals(&self) -> &CdfIntegrals {
        &self.integrals
    }

    pub fn grid(&self) -> &TrapezoidGrid {
        &self.grid
    }

    fn difference(&self, p: &WeightVector, q: &WeightVector) -> Result<Vec<f64>> {
        check_len(self.n_components, p.len())?;
        check_len(self.n_components, q.len())?;
        Ok(p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a - b).collect())
    }

    /// `G_p(x) − G_q(x)` at every quadrature node.
    pub fn cdf_difference(&self, p: &WeightVector, q: &WeightVector) -> Result<Vec<f64>> {
        let delta = self.difference(p, q)?;
        let g = self.grid.len();
        let mut diff = vec![0.0; g];
        for (n, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &self.cdf[n * g..(n + 1) * g];
            for (acc, f) in diff.iter_mut().zip(row) {
                *acc += d * f;
            }
        }
        Ok(diff)
    }

    pub fn w1_integral(&self, p: &WeightVector, q: &WeightVector) -> Result<f64> {
        let diff = self.cdf_difference(p, q)?;
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(&diff)
            .map(|(w, d)| w * d.abs())
            .sum())
    }

    /// The two sign-split norms `(‖F·B·Δ‖₁, ‖F·(I−B)·Δ‖₁)`.
    pub fn split_norms(&self, p: &WeightVector, q: &WeightVector) -> Result<(f64, f64)> {
        let delta = self.difference(p, q)?;
        let split = SignSplit::new(p.as_slice(), q.as_slice())?;
        let a = self.integrals.as_slice();
        let mut pos = 0.0;
        let mut neg = 0.0;
        for ((d, &b), a) in delta.iter().zip(split.as_slice()).zip(a) {
            if b {
                pos += (a * d).abs();
            } else {
                neg += (a * d).abs();
            }
        }
        Ok((pos, neg))
    }

    pub fn w1_vectorized(&self, p: &WeightVector, q: &WeightVector) -> Result<f64> {
        let (pos, neg) = self.split_norms(p, q)?;
        Ok((pos - neg).abs())
    }
}

/// Integral form of W1 on the default grid.
pub fn w1_integral(basis: &Basis, p: &WeightVector, q: &WeightVector) -> Result<f64> {
    W1Evaluator::with_default_grid(basis)?.w1_integral(p, q)
}

/// Sign-split vectorized form of W1 on the default grid.
pub fn w1_vectorized(basis: &Basis, p: &WeightVector, q: &WeightVector) -> Result<f64> {
    W1Evaluator::with_default_grid(basis)?.w1_vectorized(p, q)
}

pub fn cdf_integrals(basis: &Basis) -> Result<CdfIntegrals> {
    Ok(W1Evaluator::with_default_grid(basis)?.integrals)
}

/// W1 between two empirical distributions, `∫₀¹ |F_p⁻¹(z) − F_q⁻¹(z)| dz`.
///
/// The quantile functions are step functions with breaks at `i/n` and `j/m`;
/// the integral is evaluated exactly over the merged breakpoints. For equal
/// sample sizes this is the mean of `|x_(i) − y_(i)|`.
pub fn w1_empirical(samples_p: &[f64], samples_q: &[f64]) -> Result<f64> {
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(Error::invalid("w1_empirical needs non-empty sample sets"));
    }
    if samples_p.iter().chain(samples_q).any(|x| !x.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let mut xs = samples_p.to_vec();
    let mut ys = samples_q.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);

    if xs.len() == ys.len() {
        let total: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum();
        return Ok(total / xs.len() as f64);
    }

    // Walk both step functions in integer units of 1/(n·m).
    let n = xs.len() as u64;
    let m = ys.len() as u64;
    let (mut i, mut j) = (0usize, 0usize);
    let (mut pos, mut next_x, mut next_y) = (0u64, m, n);
    let mut total = 0.0;
    let denom = (n * m) as f64;
    while i < xs.len() && j < ys.len() {
        let end = next_x.min(next_y);
        total += (end - pos) as f64 * (xs[i] - ys[j]).abs();
        pos = end;
        if next_x == end {
            i += 1;
            next_x += m;
        }
        if next_y == end {
            j += 1;
            next_y += n;
        }
    }
    Ok(total / denom)
}
