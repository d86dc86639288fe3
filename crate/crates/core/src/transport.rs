//! Iterative transport of one weight vector onto another with NGMG.
//!
//! Each iteration computes the deficit `L = min(π̂ − target, 0)` and its
//! NGMG pull field `g = −M·L`, updates `π̂` and renormalizes. The loop stops
//! when the missing mass `‖L‖₁` drops to the tolerance.
//!
//! Two update rules are available:
//!
//! * [`UpdateRule::Gravitational`] (default): every position holding surplus
//!   mass sends a fraction `η` of that surplus towards the deficits, split in
//!   proportion to the individual pull terms `M[j][i]·|L_i|` that make up its
//!   NGMG entry `g_j`.
//! * [`UpdateRule::Additive`]: `π̂ ← normalize(π̂ + η·g)`. Because the kernel has
//!   a zero diagonal, an isolated deficit never receives mass under this rule
//!   and the iteration stalls; it is kept for comparison.

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, WeightVector};
use crate::error::{check_len, Error, Result};
use crate::metrics::W1Evaluator;
use crate::ngmg::{self, KernelMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    #[default]
    Gravitational,
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportConfig {
    pub step_size: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    /// `None` uses twice the basis spacing.
    pub kernel_scale: Option<f64>,
    /// Keep a copy of `π̂` at every iteration.
    pub record_trace: bool,
    pub rule: UpdateRule,
}

impl Default for TransportConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            tolerance: 1e-3,
            max_iters: 2000,
            kernel_scale: None,
            record_trace: false,
            rule: UpdateRule::Gravitational,
        }
    }
}

impl TransportConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::invalid(format!("step size must be > 0, got {}", self.step_size)));
        }
        if self.rule == UpdateRule::Gravitational && self.step_size > 1.0 {
            return Err(Error::invalid(format!(
                "gravitational step size is a fraction of surplus and must be <= 1, got {}",
                self.step_size
            )));
        }
        if let Some(s) = self.kernel_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!("kernel scale must be > 0, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportStatus {
    Converged,
    MaxItersReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub w1: f64,
    pub ngmg_norm: f64,
    /// `‖deficit‖₁`, the stopping loss.
    pub loss: f64,
    pub snapshot: Option<WeightVector>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransportTrace {
    pub records: Vec<TraceRecord>,
}

impl TransportTrace {
    pub fn first(&self) -> Option<&TraceRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// CSV with header `iter,w1,ngmg_norm`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,w1,ngmg_norm\n");
        for r in &self.records {
            out.push_str(&format!("{},{:e},{:e}\n", r.iter, r.w1, r.ngmg_norm));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportOutcome {
    pub weights: WeightVector,
    pub trace: TransportTrace,
    pub status: TransportStatus,
}

/// Clamps negatives to zero and rescales to unit sum.
///
/// A vector that already sums to one up to rounding is returned unchanged, so
/// `normalize` is idempotent bit for bit.
pub fn normalize(v: &[f64]) -> Result<WeightVector> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("normalize input".into()));
    }
    let clamped: Vec<f64> = v.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 {
        return Err(Error::invalid("cannot normalize a vector with no positive entry"));
    }
    let rounding = 4.0 * f64::EPSILON * clamped.len() as f64;
    if (sum - 1.0).abs() <= rounding && clamped.iter().zip(v).all(|(a, b)| a == b) {
        return WeightVector::new(clamped);
    }
    WeightVector::new(clamped.into_iter().map(|x| x / sum).collect())
}

pub fn transport(
    basis: &Basis,
    target: &WeightVector,
    init: &WeightVector,
    config: &TransportConfig,
) -> Result<TransportOutcome> {
    config.validate()?;
    let scale = config
        .kernel_scale
        .unwrap_or_else(|| ngmg::default_kernel_scale(basis));
    let kernel = ngmg::kernel(basis, scale)?;
    let ev = W1Evaluator::with_default_grid(basis)?;
    transport_with(&ev, &kernel, target, init, config)
}

/// [`transport`] with a prebuilt evaluator and kernel.
pub fn transport_with(
    ev: &W1Evaluator,
    kernel: &KernelMatrix,
    target: &WeightVector,
    init: &WeightVector,
    config: &TransportConfig,
) -> Result<TransportOutcome> {
    config.validate()?;
    check_len(kernel.dim(), target.len())?;
    check_len(kernel.dim(), init.len())?;

    let mut current = init.clone();
    let mut trace = TransportTrace::default();
    for iter in 0..=config.max_iters {
        let l = ngmg::deficit_weights(&current, target)?;
        let pull = ngmg::ngmg_gradient(kernel, &l)?;
        let loss = l.norm_1();
        trace.records.push(TraceRecord {
            iter,
            w1: ev.w1_integral(&current, target)?,
            ngmg_norm: pull.iter().sum(),
            loss,
            snapshot: config.record_trace.then(|| current.clone()),
        });
        if loss <= config.tolerance {
            return Ok(TransportOutcome {
                weights: current,
                trace,
                status: TransportStatus::Converged,
            });
        }
        if iter == config.max_iters {
            break;
        }
        let next = match config.rule {
            UpdateRule::Gravitational => {
                gravitational_step(kernel, current.as_slice(), target.as_slice(), &pull, config.step_size)
            }
            UpdateRule::Additive => current
                .as_slice()
                .iter()
                .zip(&pull)
                .map(|(w, g)| w + config.step_size * g)
                .collect(),
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("transport update at iteration {iter}")));
        }
        current = normalize(&next)?;
    }
    Ok(TransportOutcome {
        weights: current,
        trace,
        status: TransportStatus::MaxItersReached,
    })
}

fn gravitational_step(kernel: &KernelMatrix, current: &[f64], target: &[f64], pull: &[f64], eta: f64) -> Vec<f64> {
    let n = current.len();
    let wells: Vec<f64> = current.iter().zip(target).map(|(c, t)| (t - c).max(0.0)).collect();
    let total_well: f64 = wells.iter().sum();
    let mut next = current.to_vec();
    for j in 0..n {
        let surplus = (current[j] - target[j]).max(0.0);
        if surplus == 0.0 {
            continue;
        }
        let moved = eta * surplus;
        next[j] -= moved;
        if pull[j] > 0.0 {
            for i in 0..n {
                if wells[i] > 0.0 {
                    next[i] += moved * kernel.get(j, i) * wells[i] / pull[j];
                }
            }
        } else {
            // kernel underflowed at this distance: no pull, so spread by depth
            for i in 0..n {
                next[i] += moved * wells[i] / total_well;
            }
        }
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_basis;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[0.2, 0.2]).unwrap().as_slice(), &[0.5, 0.5]);
        let w = normalize(&[-0.1, 0.3]).unwrap();
        assert_eq!(w.as_slice()[0], 0.0);
        assert!((w.as_slice()[1] - 1.0).abs() < 1e-15);
        assert!(normalize(&[0.0, -1.0]).is_err());
        assert!(normalize(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn normalize_is_idempotent() {
        let w = normalize(&[0.3, 0.1, 0.7, 0.05]).unwrap();
        let again = normalize(w.as_slice()).unwrap();
        assert_eq!(w.as_slice(), again.as_slice());
    }

    #[test]
    fn init_equal_target_converges_immediately() {
        let b = build_basis(6, 0.0, 5.0, 1.0, 4.0).unwrap();
        let t = WeightVector::new(vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let out = transport(&b, &t, &t, &TransportConfig::default()).unwrap();
        assert_eq!(out.status, TransportStatus::Converged);
        assert_eq!(out.trace.records.len(), 1);
        assert_eq!(out.trace.records[0].iter, 0);
        assert_eq!(out.trace.records[0].w1, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = TransportConfig::default();
        c.tolerance = 0.0;
        assert!(c.validate().is_err());
        let mut c = TransportConfig::default();
        c.max_iters = 0;
        assert!(c.validate().is_err());
        let mut c = TransportConfig::default();
        c.step_size = 1.5;
        assert!(c.validate().is_err());
        c.rule = UpdateRule::Additive;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn trace_csv_header() {
        let b = build_basis(4, 0.0, 3.0, 1.0, 4.0).unwrap();
        let out = transport(
            &b,
            &WeightVector::one_hot(4, 2),
            &WeightVector::uniform(4),
            &TransportConfig::default(),
        )
        .unwrap();
        assert!(out.trace.to_csv().starts_with("iter,w1,ngmg_norm\n"));
    }
}
