//! Entropy losses over predicted probabilities, with analytic gradients.
//!
//! The NGMG entropy weights each position's log term by the NGMG pull computed
//! from the normalized target and prediction. The weights are treated as
//! constants when differentiating.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::ngmg::{self, KernelMatrix};

/// Clamp applied to predictions wherever a logarithm is taken.
pub const PROB_CLAMP: f64 = 1e-7;

pub const DEFAULT_LAMBDA_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Cross-entropy `−Σ p log p̂`.
pub fn shannon(p: &[f64], p_hat: &[f64]) -> Result<LossValue> {
    check_len(p.len(), p_hat.len())?;
    let mut value = 0.0;
    let gradient = p
        .iter()
        .zip(p_hat)
        .map(|(&p, &q)| {
            let q = clamp(q);
            value -= p * q.ln();
            -p / q
        })
        .collect();
    Ok(LossValue { value, gradient })
}

/// Mean binary cross-entropy over the `K` outputs.
pub fn bce(targets: &[f64], p_hat: &[f64]) -> Result<LossValue> {
    check_len(targets.len(), p_hat.len())?;
    if targets.is_empty() {
        return Err(Error::invalid("bce needs at least one output"));
    }
    let k = targets.len() as f64;
    let mut value = 0.0;
    let gradient = targets
        .iter()
        .zip(p_hat)
        .map(|(&t, &q)| {
            let q = clamp(q);
            value -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
            (-t / q + (1.0 - t) / (1.0 - q)) / k
        })
        .collect();
    Ok(LossValue {
        value: value / k,
        gradient,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NgmgMode {
    /// Undershoot weights on `−log p̂` only.
    Literal,
    /// Undershoot weights on `−log p̂`, overshoot weights on `−log(1 − p̂)`,
    /// plus a small BCE floor.
    #[default]
    TwoSided,
}

/// Per-position NGMG weights for one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct NgmgWeights {
    /// Pull towards positions where the prediction undershoots.
    pub under: Vec<f64>,
    /// Pull towards positions where the prediction overshoots.
    pub over: Vec<f64>,
}

fn unit_sum(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        vec![0.0; v.len()]
    }
}

/// NGMG weights from normalized targets and (clamped) predictions.
pub fn ngmg_weights(targets: &[f64], p_hat: &[f64], kernel: &KernelMatrix) -> Result<NgmgWeights> {
    check_len(targets.len(), p_hat.len())?;
    check_len(kernel.dim(), targets.len())?;
    let t_norm = unit_sum(targets);
    let clamped: Vec<f64> = p_hat.iter().map(|&q| clamp(q)).collect();
    let p_norm = unit_sum(&clamped);
    let under = ngmg::ngmg_gradient(kernel, &ngmg::deficit(&p_norm, &t_norm)?)?;
    let over = ngmg::ngmg_gradient(kernel, &ngmg::deficit(&t_norm, &p_norm)?)?;
    Ok(NgmgWeights { under, over })
}

/// NGMG entropy with the weights held fixed.
pub fn ngmg_entropy_with_weights(
    targets: &[f64],
    p_hat: &[f64],
    weights: &NgmgWeights,
    mode: NgmgMode,
    lambda_floor: f64,
) -> Result<LossValue> {
    check_len(targets.len(), p_hat.len())?;
    check_len(weights.under.len(), p_hat.len())?;
    let mut value = 0.0;
    let mut gradient = vec![0.0; p_hat.len()];
    for (j, &q) in p_hat.iter().enumerate() {
        let q = clamp(q);
        value -= weights.under[j] * q.ln();
        gradient[j] -= weights.under[j] / q;
        if mode == NgmgMode::TwoSided {
            value -= weights.over[j] * (1.0 - q).ln();
            gradient[j] += weights.over[j] / (1.0 - q);
        }
    }
    if mode == NgmgMode::TwoSided && lambda_floor > 0.0 {
        let floor = bce(targets, p_hat)?;
        value += lambda_floor * floor.value;
        for (g, f) in gradient.iter_mut().zip(&floor.gradient) {
            *g += lambda_floor * f;
        }
    }
    Ok(LossValue { value, gradient })
}

pub fn ngmg_entropy(
    targets: &[f64],
    p_hat: &[f64],
    kernel: &KernelMatrix,
    mode: NgmgMode,
    lambda_floor: f64,
) -> Result<LossValue> {
    let weights = ngmg_weights(targets, p_hat, kernel)?;
    ngmg_entropy_with_weights(targets, p_hat, &weights, mode, lambda_floor)
}

/// Loss selector used by training configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Bce,
    NgmgLiteral,
    NgmgTwoSided,
    /// Squared error; used for regression heads such as the denoiser.
    Mse,
}

impl LossName {
    pub fn as_str(self) -> &'static str {
        match self {
            LossName::Bce => "bce",
            LossName::NgmgLiteral => "ngmg_literal",
            LossName::NgmgTwoSided => "ngmg_two_sided",
            LossName::Mse => "mse",
        }
    }
}

impl fmt::Display for LossName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(LossName::Bce),
            "ngmg_literal" => Ok(LossName::NgmgLiteral),
            "ngmg_two_sided" => Ok(LossName::NgmgTwoSided),
            "mse" => Ok(LossName::Mse),
            other => Err(Error::invalid(format!("unknown loss name {other:?}"))),
        }
    }
}

/// Mean squared error over the outputs.
pub fn mse(targets: &[f64], prediction: &[f64]) -> Result<LossValue> {
    check_len(targets.len(), prediction.len())?;
    if targets.is_empty() {
        return Err(Error::invalid("mse needs at least one output"));
    }
    let k = targets.len() as f64;
    let mut value = 0.0;
    let gradient = targets
        .iter()
        .zip(prediction)
        .map(|(t, p)| {
            let d = p - t;
            value += d * d;
            2.0 * d / k
        })
        .collect();
    Ok(LossValue {
        value: value / k,
        gradient,
    })
}

/// Evaluates the named loss for one sample.
pub fn evaluate(
    name: LossName,
    targets: &[f64],
    prediction: &[f64],
    kernel: Option<&KernelMatrix>,
    lambda_floor: f64,
) -> Result<LossValue> {
    match name {
        LossName::Bce => bce(targets, prediction),
        LossName::Mse => mse(targets, prediction),
        LossName::NgmgLiteral | LossName::NgmgTwoSided => {
            let kernel = kernel.ok_or_else(|| Error::invalid("ngmg losses need a kernel"))?;
            let mode = if name == LossName::NgmgLiteral {
                NgmgMode::Literal
            } else {
                NgmgMode::TwoSided
            };
            ngmg_entropy(targets, prediction, kernel, mode, lambda_floor)
        }
    }
}
