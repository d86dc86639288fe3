//! Fixed GMM-expansion basis and the one-iteration weight learner.
//!
//! A [`Basis`] is a grid of `N` evenly spaced Gaussian components sharing a
//! single scale. Only the mixture weights ([`WeightVector`]) are ever learned.

use rand::Rng;
use rand_distr::{weighted::WeightedIndex, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::normal;
use crate::quadrature::TrapezoidGrid;

/// Default support padding, in units of the component scale.
pub const DEFAULT_SUPPORT_PAD: f64 = 4.0;

const SPACING_RTOL: f64 = 1e-12;
const WEIGHT_SUM_ATOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisDoc", into = "BasisDoc")]
pub struct Basis {
    means: Vec<f64>,
    scale: f64,
    support_lo: f64,
    support_hi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisDoc {
    n_components: usize,
    means: Vec<f64>,
    scale: f64,
    support_lo: f64,
    support_hi: f64,
}

impl TryFrom<BasisDoc> for Basis {
    type Error = Error;

    fn try_from(doc: BasisDoc) -> Result<Self> {
        check_len(doc.n_components, doc.means.len())?;
        Basis::from_parts(doc.means, doc.scale, doc.support_lo, doc.support_hi)
    }
}

impl From<Basis> for BasisDoc {
    fn from(b: Basis) -> Self {
        BasisDoc {
            n_components: b.means.len(),
            means: b.means,
            scale: b.scale,
            support_lo: b.support_lo,
            support_hi: b.support_hi,
        }
    }
}

impl Basis {
    /// Validates raw parts against the basis invariants.
    pub fn from_parts(means: Vec<f64>, scale: f64, support_lo: f64, support_hi: f64) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::invalid(format!(
                "basis needs at least 2 components, got {}",
                means.len()
            )));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("component scale must be > 0, got {scale}")));
        }
        if means.iter().any(|m| !m.is_finite()) || !support_lo.is_finite() || !support_hi.is_finite() {
            return Err(Error::invalid("basis means and support must be finite"));
        }
        let step = means[1] - means[0];
        if step <= 0.0 {
            return Err(Error::invariant("basis means must be strictly increasing"));
        }
        for w in means.windows(2) {
            let d = w[1] - w[0];
            if (d - step).abs() > SPACING_RTOL * step.abs().max(w[1].abs()) * 8.0 {
                return Err(Error::invariant("basis means must be evenly spaced"));
            }
        }
        if !(support_lo < means[0] && support_hi > means[means.len() - 1]) {
            return Err(Error::invariant("support must strictly contain every mean"));
        }
        Ok(Self {
            means,
            scale,
            support_lo,
            support_hi,
        })
    }

    pub fn n_components(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn spacing(&self) -> f64 {
        self.means[1] - self.means[0]
    }

    pub fn support(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    /// Quadrature grid over the bounded support.
    pub fn grid(&self, n_points: usize) -> Result<TrapezoidGrid> {
        TrapezoidGrid::new(self.support_lo, self.support_hi, n_points)
    }

    /// Density of component `n` at `x`.
    #[inline]
    pub fn component_pdf(&self, n: usize, x: f64) -> f64 {
        normal::pdf(x, self.means[n], self.scale)
    }

    /// Distribution function of component `n` at `x`.
    #[inline]
    pub fn component_cdf(&self, n: usize, x: f64) -> f64 {
        normal::cdf(x, self.means[n], self.scale)
    }

    /// Unit-spacing grid `0, 1, …, n-1` with scale 1, used where only
    /// positions matter (loss kernels, bare weight vectors).
    pub fn unit_grid(n_components: usize) -> Result<Self> {
        build_basis(n_components, 0.0, (n_components.max(2) - 1) as f64, 1.0, DEFAULT_SUPPORT_PAD)
    }
}

/// Default component scale: the spacing between neighbouring means.
pub fn default_scale(n_components: usize, data_min: f64, data_max: f64) -> f64 {
    (data_max - data_min) / (n_components.max(2) - 1) as f64
}

/// Spreads `n_components` means evenly over `[data_min, data_max]`.
pub fn build_basis(
    n_components: usize,
    data_min: f64,
    data_max: f64,
    scale: f64,
    support_pad: f64,
) -> Result<Basis> {
    if n_components < 2 {
        return Err(Error::invalid(format!(
            "n_components must be at least 2, got {n_components}"
        )));
    }
    if !data_min.is_finite() || !data_max.is_finite() {
        return Err(Error::invalid("data bounds must be finite"));
    }
    if data_max <= data_min {
        return Err(Error::invalid(format!(
            "data_max ({data_max}) must exceed data_min ({data_min})"
        )));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::invalid(format!("scale must be > 0, got {scale}")));
    }
    if !(support_pad.is_finite() && support_pad > 0.0) {
        return Err(Error::invalid(format!("support_pad must be > 0, got {support_pad}")));
    }
    let step = (data_max - data_min) / (n_components - 1) as f64;
    let means = (0..n_components)
        .map(|i| data_min + i as f64 * step)
        .collect();
    Basis::from_parts(
        means,
        scale,
        data_min - support_pad * scale,
        data_max + support_pad * scale,
    )
}

/// Mixture weights over the components of a basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightDoc", into = "WeightDoc")]
pub struct WeightVector {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightDoc {
    n_components: usize,
    weights: Vec<f64>,
}

impl TryFrom<WeightDoc> for WeightVector {
    type Error = Error;

    fn try_from(doc: WeightDoc) -> Result<Self> {
        check_len(doc.n_components, doc.weights.len())?;
        WeightVector::new(doc.weights)
    }
}

impl From<WeightVector> for WeightDoc {
    fn from(w: WeightVector) -> Self {
        WeightDoc {
            n_components: w.weights.len(),
            weights: w.weights,
        }
    }
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invariant(format!("weights must be finite and >= 0, found {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_ATOL {
            return Err(Error::invariant(format!("weights must sum to 1, sum is {sum}")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, index: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.weights
    }

    pub(crate) fn check_basis(&self, basis: &Basis) -> Result<()> {
        check_len(basis.n_components(), self.len())
    }
}

/// Result of [`fit_weights`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub weights: WeightVector,
    /// Every component likelihood underflowed; `weights` fell back to uniform.
    pub degenerate: bool,
}

/// Starting point of the learner: every component gets `1/N`.
pub fn initial_weights(basis: &Basis) -> WeightVector {
    WeightVector::uniform(basis.n_components())
}

/// One-iteration learner: `π_n = l_n / Σ l_n` with `l_n = Σ_d φ_n(x_d)`.
pub fn fit_weights(basis: &Basis, data: &[f64]) -> Result<WeightFit> {
    if data.is_empty() {
        return Err(Error::invalid("cannot fit weights to empty data"));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("data contains non-finite values"));
    }
    // sorted copy makes the sums independent of input order
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);

    let likelihoods: Vec<f64> = (0..basis.n_components())
        .map(|n| sorted.iter().map(|&x| basis.component_pdf(n, x)).sum())
        .collect();
    let total: f64 = likelihoods.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        log::warn!("all component likelihoods underflowed; falling back to uniform weights");
        return Ok(WeightFit {
            weights: initial_weights(basis),
            degenerate: true,
        });
    }
    let weights = likelihoods.into_iter().map(|l| l / total).collect();
    Ok(WeightFit {
        weights: WeightVector::new(weights)?,
        degenerate: false,
    })
}

/// Mixture density `Σ π_n φ_n(x)`.
pub fn density_at(basis: &Basis, weights: &WeightVector, x: f64) -> Result<f64> {
    weights.check_basis(basis)?;
    Ok(weights
        .as_slice()
        .iter()
        .enumerate()
        .map(|(n, &w)| w * basis.component_pdf(n, x))
        .sum())
}

/// Draws `n` samples from the mixture.
pub fn sample_mixture(basis: &Basis, weights: &WeightVector, n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    weights.check_basis(basis)?;
    let pick = WeightedIndex::new(weights.as_slice()).map_err(|e| Error::invalid(format!("mixture weights: {e}")))?;
    Ok((0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            basis.means()[pick.sample(rng)] + basis.scale() * z
        })
        .collect())
}
