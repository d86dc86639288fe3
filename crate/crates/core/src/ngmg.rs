//! Negative Gaussian mixture gradient.
//!
//! The deficit `L = min(p − q, 0)` marks the positions where `p` falls short of
//! `q`. A zero-diagonal Gaussian kernel `M` spreads each deficit over the other
//! positions, and the gradient is `NGMG(L) = −M·L`, which is entrywise
//! non-negative. Position `j` never sees its own deficit.

use crate::basis::{Basis, WeightVector};
use crate::error::{check_len, Error, Result};
use crate::linalg::{self, Lu};
use crate::metrics::{SignSplit, W1Evaluator};
use crate::normal;

/// Condition estimate above which [`prop2_w1`] refuses to invert the kernel.
pub const MAX_KERNEL_CONDITION: f64 = 1e12;

/// Negative part of `p − q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeficitVector {
    values: Vec<f64>,
}

impl DeficitVector {
    /// Accepts any vector with non-positive finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v > 0.0) {
            return Err(Error::invariant(format!("deficit entries must be <= 0, found {v}")));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `‖L‖₁`, the total missing mass.
    pub fn norm_1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// `L_i = min(p_i − q_i, 0)`.
pub fn deficit(p: &[f64], q: &[f64]) -> Result<DeficitVector> {
    check_len(p.len(), q.len())?;
    Ok(DeficitVector {
        values: p.iter().zip(q).map(|(a, b)| (a - b).min(0.0)).collect(),
    })
}

pub fn deficit_weights(p: &WeightVector, q: &WeightVector) -> Result<DeficitVector> {
    deficit(p.as_slice(), q.as_slice())
}

/// Zero-diagonal Gaussian kernel over the basis means.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    n: usize,
    // row-major; m[j * n + i] = φ(μ_j; μ_i, σ)
    m: Vec<f64>,
    kernel_scale: f64,
}

impl KernelMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kernel_scale(&self) -> f64 {
        self.kernel_scale
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.n + col]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest entry, `φ` at the nearest-neighbour distance.
    pub fn max_entry(&self) -> f64 {
        self.m.iter().copied().fold(0.0, f64::max)
    }

    /// Largest column sum `‖M‖₁`.
    pub fn max_column_sum(&self) -> f64 {
        linalg::norm_1(self.n, &self.m)
    }

    /// `M·v`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, v.len())?;
        Ok(self
            .m
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn factor(&self) -> Result<(Lu, f64)> {
        let lu = Lu::factor(self.n, &self.m)?;
        let cond = linalg::condition_1(self.n, &self.m, &lu);
        if !cond.is_finite() || cond > MAX_KERNEL_CONDITION {
            return Err(Error::IllConditioned(cond));
        }
        Ok((lu, cond))
    }
}

/// Builds `M` with `m[j][i] = φ(μ_j; μ_i, σ)` off the diagonal and zeros on it.
pub fn kernel(basis: &Basis, kernel_scale: f64) -> Result<KernelMatrix> {
    kernel_from_positions(basis.means(), kernel_scale)
}

pub fn kernel_from_positions(positions: &[f64], kernel_scale: f64) -> Result<KernelMatrix> {
    if !(kernel_scale.is_finite() && kernel_scale > 0.0) {
        return Err(Error::invalid(format!("kernel scale must be > 0, got {kernel_scale}")));
    }
    let n = positions.len();
    let mut m = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            if i != j {
                m[j * n + i] = normal::pdf(positions[j], positions[i], kernel_scale);
            }
        }
    }
    Ok(KernelMatrix { n, m, kernel_scale })
}

/// Default kernel scale: twice the component spacing.
pub fn default_kernel_scale(basis: &Basis) -> f64 {
    2.0 * basis.spacing()
}

/// `NGMG(L) = −M·L`.
pub fn ngmg_gradient(kernel: &KernelMatrix, l: &DeficitVector) -> Result<Vec<f64>> {
    let ml = kernel.apply(l.as_slice())?;
    // +0.0 turns the -0.0 produced by negating zero sums into a plain zero
    Ok(ml.into_iter().map(|v| -v + 0.0).collect())
}

pub fn ngmg_norm(kernel: &KernelMatrix, l: &DeficitVector) -> Result<f64> {
    Ok(ngmg_gradient(kernel, l)?.iter().sum())
}

/// W1 through the kernel: `| ‖F·M⁻¹·NGMG(L⁺)‖₁ − ‖F·M⁻¹·NGMG(L⁻)‖₁ |`
/// with `L⁺ = −B·Δ` and `L⁻ = (I − B)·Δ`.
///
/// The inverse cancels the kernel analytically; here it is applied numerically
/// so the result can be checked against [`W1Evaluator::w1_vectorized`].
pub fn prop2_w1(basis: &Basis, kernel: &KernelMatrix, p: &WeightVector, q: &WeightVector) -> Result<f64> {
    let ev = W1Evaluator::with_default_grid(basis)?;
    prop2_w1_with(&ev, kernel, p, q)
}

pub fn prop2_w1_with(
    ev: &W1Evaluator,
    kernel: &KernelMatrix,
    p: &WeightVector,
    q: &WeightVector,
) -> Result<f64> {
    let (lu, _) = kernel.factor()?;
    prop2_w1_factored(ev, kernel, &lu, p, q)
}

/// Same as [`prop2_w1_with`] with a precomputed factorization of the kernel.
pub fn prop2_w1_factored(
    ev: &W1Evaluator,
    kernel: &KernelMatrix,
    lu: &Lu,
    p: &WeightVector,
    q: &WeightVector,
) -> Result<f64> {
    check_len(kernel.dim(), p.len())?;
    check_len(kernel.dim(), q.len())?;
    let split = SignSplit::new(p.as_slice(), q.as_slice())?;
    let delta: Vec<f64> = p.as_slice().iter().zip(q.as_slice()).map(|(a, b)| a - b).collect();

    let l_plus: Vec<f64> = delta
        .iter()
        .zip(split.as_slice())
        .map(|(&d, &b)| if b { -d } else { 0.0 })
        .collect();
    let l_minus: Vec<f64> = delta
        .iter()
        .zip(split.as_slice())
        .map(|(&d, &b)| if b { 0.0 } else { d })
        .collect();

    let a = ev.cdf_integrals().as_slice();
    let weighted_norm = |l: Vec<f64>| -> Result<f64> {
        let grad = ngmg_gradient(kernel, &DeficitVector::new(l)?)?;
        let x = lu.solve(&grad);
        Ok(a.iter().zip(&x).map(|(a, x)| (a * x).abs()).sum())
    };
    let plus = weighted_norm(l_plus)?;
    let minus = weighted_norm(l_minus)?;
    Ok((plus - minus).abs())
}

/// Thresholds for deciding that a sequence has converged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceTolerances {
    pub w1: f64,
    pub ngmg: f64,
}

impl ConvergenceTolerances {
    /// `w1 < 1e-6` and `‖NGMG‖₁ < 1e-6 · max entry · N`.
    pub fn for_kernel(kernel: &KernelMatrix) -> Self {
        Self {
            w1: 1e-6,
            ngmg: 1e-6 * kernel.max_entry() * kernel.dim() as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceStep {
    pub w1: f64,
    pub ngmg_norm: f64,
}

/// Per-step W1 and NGMG norm for a sequence approaching a target.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<ConvergenceStep>,
    pub tolerances: ConvergenceTolerances,
    pub w1_converged: bool,
    pub ngmg_converged: bool,
}

impl ConvergenceReport {
    /// Both measures agree on whether the sequence reached the target.
    pub fn equivalent(&self) -> bool {
        self.w1_converged == self.ngmg_converged
    }
}

pub fn prop3_convergence_check(
    basis: &Basis,
    kernel: &KernelMatrix,
    sequence: &[WeightVector],
    target: &WeightVector,
) -> Result<ConvergenceReport> {
    let ev = W1Evaluator::with_default_grid(basis)?;
    prop3_convergence_check_with(&ev, kernel, sequence, target, ConvergenceTolerances::for_kernel(kernel))
}

pub fn prop3_convergence_check_with(
    ev: &W1Evaluator,
    kernel: &KernelMatrix,
    sequence: &[WeightVector],
    target: &WeightVector,
    tolerances: ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    if sequence.is_empty() {
        return Err(Error::invalid("convergence check needs a non-empty sequence"));
    }
    let steps = sequence
        .iter()
        .map(|p| {
            let w1 = ev.w1_integral(p, target)?;
            let ngmg_norm = ngmg_norm(kernel, &deficit_weights(p, target)?)?;
            Ok(ConvergenceStep { w1, ngmg_norm })
        })
        .collect::<Result<Vec<_>>>()?;
    let last = steps[steps.len() - 1];
    Ok(ConvergenceReport {
        w1_converged: last.w1 < tolerances.w1,
        ngmg_converged: last.ngmg_norm < tolerances.ngmg,
        steps,
        tolerances,
    })
}
