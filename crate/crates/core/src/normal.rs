//! Univariate normal density and distribution function.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

/// Density of N(mean, scale²) at `x`.
#[inline]
pub fn pdf(x: f64, mean: f64, scale: f64) -> f64 {
    let z = (x - mean) / scale;
    (-0.5 * z * z).exp() / (scale * (2.0 * PI).sqrt())
}

/// Distribution function of N(mean, scale²) at `x`.
#[inline]
pub fn cdf(x: f64, mean: f64, scale: f64) -> f64 {
    // erfc keeps precision in the far left tail
    0.5 * erfc(-(x - mean) / (scale * SQRT_2))
}
