//! GMM-expansion density estimation, Wasserstein distances under the
//! expansion, negative Gaussian mixture gradients (NGMG), NGMG-weighted
//! losses and a small GMM-conditioned diffusion model.

pub mod basis;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod net;
pub mod ngmg;
pub mod normal;
pub mod plot;
pub mod quadrature;
pub mod transport;

pub use error::{Error, Result};
