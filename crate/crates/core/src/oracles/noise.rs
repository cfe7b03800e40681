//! Additive gradient noise for the stochastic first-order oracle.

use crate::error::{ensure, Result};
use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// Distribution of the perturbation vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFamily {
    Gaussian,
}

/// Additive perturbation `eps = nu/sqrt(d) 1 + sigma/sqrt(d) g` with `g`
/// componentwise standard normal. The `1/sqrt(d)` scaling keeps
/// `E||eps||^2 = nu^2 + sigma^2` independent of the dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub nu: f64,
    pub sigma: f64,
    pub family: NoiseFamily,
}

impl NoiseModel {
    pub fn new(nu: f64, sigma: f64) -> Result<Self> {
        ensure!(
            nu.is_finite() && nu >= 0.0 && sigma.is_finite() && sigma >= 0.0,
            "noise magnitudes must be finite and >= 0, got nu = {nu}, sigma = {sigma}"
        );
        Ok(NoiseModel {
            nu,
            sigma,
            family: NoiseFamily::Gaussian,
        })
    }

    pub fn none() -> Self {
        NoiseModel {
            nu: 0.0,
            sigma: 0.0,
            family: NoiseFamily::Gaussian,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nu == 0.0 && self.sigma == 0.0
    }

    /// Draws one perturbation vector in dimension `d`.
    pub fn draw<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> DVector<f64> {
        let scale = 1.0 / (d as f64).sqrt();
        let bias = self.nu * scale;
        match self.family {
            NoiseFamily::Gaussian => DVector::from_fn(d, |_, _| {
                bias + self.sigma * scale * rng.sample::<f64, _>(StandardNormal)
            }),
        }
    }
}

/// Exact gradient plus one perturbation draw.
pub fn noisy_gradient<R: Rng + ?Sized>(
    gradient: &DVector<f64>,
    model: &NoiseModel,
    rng: &mut R,
) -> DVector<f64> {
    if model.is_zero() {
        return gradient.clone();
    }
    gradient + model.draw(gradient.len(), rng)
}
