use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Noise and released statistics live on a grid of `2^-GRID_BITS`. With
/// magnitudes below `2^20`, sums and differences of grid values are exact in
/// `f64`, so subtracting a deleted value never perturbs the noise term.
pub const GRID_BITS: i32 = 32;

pub fn snap(x: f64) -> f64 {
    let scale = f64::powi(2.0, GRID_BITS);
    (x * scale).round() / scale
}

/// `(ε, δ)` privacy budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let eps_ok = epsilon > 0.0 && (epsilon.is_finite() || cfg!(feature = "zero-noise"));
        if !eps_ok {
            return Err(Error::InvalidParams(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParams(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, 0.0)
    }

    /// `ε = ∞`: every calibrated noise scale collapses to zero.
    #[cfg(feature = "zero-noise")]
    pub fn exact() -> Self {
        Self {
            epsilon: f64::INFINITY,
            delta: 0.0,
        }
    }
}

/// One draw from Laplace(0, `scale`), density `exp(-|x|/b) / 2b`, by inverse CDF.
pub fn laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if scale == 0.0 && cfg!(feature = "zero-noise") {
        return Ok(0.0);
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidScale(scale));
    }
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let tail = 1.0 - 2.0 * u.abs();
        if tail > 0.0 {
            return Ok(-scale * u.signum() * tail.ln());
        }
    }
}

/// One draw from N(0, `sigma`²). `sigma = 0` yields exactly zero.
pub fn gaussian<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidScale(sigma));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(sigma * z)
}
