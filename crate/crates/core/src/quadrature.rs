//! Fixed-grid trapezoid quadrature shared by the basis and metrics modules.

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Evenly spaced nodes over `[lo, hi]` with trapezoid weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapezoidGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TrapezoidGrid {
    pub fn new(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::invalid(format!(
                "quadrature grid needs at least 2 points, got {n_points}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::invalid(format!("bad quadrature interval [{lo}, {hi}]")));
        }
        let h = (hi - lo) / (n_points - 1) as f64;
        let nodes: Vec<f64> = (0..n_points)
            .map(|i| if i + 1 == n_points { hi } else { lo + i as f64 * h })
            .collect();
        let mut weights = vec![h; n_points];
        weights[0] = 0.5 * h;
        weights[n_points - 1] = 0.5 * h;
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` sampled at the nodes.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, w)| f(x) * w).sum()
    }
}
