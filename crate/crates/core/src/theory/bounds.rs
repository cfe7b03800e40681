//! Closed-form error bounds for regularized extrapolation.
//!
//! Three elementary bounds cover the deterministic picture: a stability
//! bound on how far the solved weights move under a Gram perturbation, a
//! regularization-only bound on the weight norm, and an acceleration bound
//! on the extrapolation error of exact linear iterates priced by the
//! regularized Chebyshev value. The combined and stochastic evaluators chain
//! them into the composite bounds for perturbed and noisy runs; their
//! unspecified proportionality constants are explicit arguments with one as
//! the conventional default.

use super::chebyshev::chebyshev_minimax;
use super::perturbation_matrix;
use crate::error::{ensure, Error, Result};
use crate::extrapolation::{compute_residuals, solve_coefficients, IterateWindow, ResidualMatrix};
use crate::linalg;
use crate::oracles::NoiseModel;
use nalgebra::DMatrix;
use rand::Rng;

/// Weight sensitivity to a Gram perturbation with spectral norm `p_norm`:
/// `||c_perturbed - c_exact|| <= (p_norm / lambda) ||c_exact||`.
pub fn stability_bound(p_norm: f64, lambda: f64, weight_norm: f64) -> f64 {
    p_norm / lambda * weight_norm
}

/// Both sides of the weight-stability inequality on a pair of windows.
#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    /// `||c_perturbed - c_exact||`.
    pub weight_shift: f64,
    /// `(||P||_2 / lambda) ||c_exact||`.
    pub bound: f64,
    /// Spectral norm of the Gram perturbation `P`.
    pub perturbation_spectral: f64,
}

/// Solves both windows at the same regularization and reports the measured
/// weight shift next to its stability bound.
pub fn check_stability(
    exact: &IterateWindow,
    perturbed: &IterateWindow,
    lambda: f64,
) -> Result<StabilityReport> {
    ensure!(
        exact.k() == perturbed.k() && exact.dim() == perturbed.dim(),
        "window shapes differ: ({}, {}) vs ({}, {})",
        exact.k(),
        exact.dim(),
        perturbed.k(),
        perturbed.dim()
    );
    ensure!(lambda > 0.0, "stability needs lambda > 0, got {lambda}");
    let r = compute_residuals(exact);
    let rt = compute_residuals(perturbed);
    let c = solve_coefficients(&r, lambda)?;
    let ct = solve_coefficients(&rt, lambda)?;
    let p = perturbation_matrix(&r, &rt)?;
    let p_norm = linalg::spectral_norm(&p);
    Ok(StabilityReport {
        weight_shift: (ct.values() - c.values()).norm(),
        bound: stability_bound(p_norm, lambda, c.norm()),
        perturbation_spectral: p_norm,
    })
}

/// Regularization-only bound on the solved weight norm:
/// `||c|| <= sqrt((||R||_2^2 + lambda) / ((k+1) lambda))`.
pub fn nonlinearity_bound(residuals: &ResidualMatrix, lambda: f64) -> Result<f64> {
    ensure!(
        lambda > 0.0 && lambda.is_finite(),
        "weight-norm bound needs finite lambda > 0, got {lambda}"
    );
    let kp1 = residuals.cols() as f64;
    Ok(((residuals.gram_spectral_norm() + lambda) / (kp1 * lambda)).sqrt())
}

/// Worst-case extrapolation error of `k + 2` exact linear iterates:
/// `(1/kappa) sqrt(S(k, kappa, lb) d0^2 - lambda ||c||^2)` with
/// `lb = lambda / d0^2` and `d0 = ||x0 - x*||`.
///
/// For the weights actually solved at `lambda` the radicand is nonnegative;
/// a negative radicand means the supplied weight norm cannot come from that
/// regularization and the regime is rejected.
pub fn acceleration_bound(
    kappa: f64,
    k: usize,
    lambda_bar: f64,
    start_dist: f64,
    weight_norm: f64,
) -> Result<f64> {
    ensure!(
        start_dist > 0.0 && start_dist.is_finite(),
        "starting distance must be positive and finite, got {start_dist}"
    );
    ensure!(
        lambda_bar >= 0.0 && lambda_bar.is_finite(),
        "normalized lambda must be finite and >= 0, got {lambda_bar}"
    );
    ensure!(weight_norm >= 0.0, "weight norm must be >= 0, got {weight_norm}");
    let s = chebyshev_minimax(k, kappa, lambda_bar)?.value();
    let radicand = s - lambda_bar * weight_norm * weight_norm;
    if radicand < 0.0 {
        return Err(Error::InvalidRegime(radicand * start_dist * start_dist));
    }
    Ok(start_dist * radicand.sqrt() / kappa)
}

/// Inputs to the combined error bound for perturbed linear iterates.
#[derive(Debug, Clone, Copy)]
pub struct CombinedBoundInputs {
    pub kappa: f64,
    /// Window order; the window holds `k + 2` points.
    pub k: usize,
    pub lambda: f64,
    /// `||x0 - x*||`.
    pub start_dist: f64,
    /// Spectral norm of the Gram perturbation `P`.
    pub perturbation_spectral: f64,
    /// Spectral norm of the accumulated noise matrix.
    pub noise_spectral: f64,
    /// Spectral norm of the perturbed residual matrix.
    pub residual_spectral: f64,
    /// Scale of the second-order perturbation term inside the acceleration
    /// radical; the analysis leaves it unspecified.
    pub remainder_constant: f64,
}

/// Combined extrapolation error bound for a perturbed window: the
/// acceleration term inflated by the Gram perturbation, plus the
/// accumulated-noise term weighted by the residual scale,
///
/// ```text
/// d0 sqrt(S) sqrt(1/kappa^2 + C d0^2 ||P||^2 / lambda^3)
///   + (||E|| / sqrt(k+1)) sqrt(1 + ||R~||^2 / lambda)
/// ```
///
/// with `S = S(k, kappa, lambda / d0^2)`.
pub fn combined_error_bound(inputs: CombinedBoundInputs) -> Result<f64> {
    let CombinedBoundInputs {
        kappa,
        k,
        lambda,
        start_dist,
        perturbation_spectral,
        noise_spectral,
        residual_spectral,
        remainder_constant,
    } = inputs;
    ensure!(
        lambda > 0.0 && lambda.is_finite(),
        "combined bound needs finite lambda > 0, got {lambda}"
    );
    ensure!(
        start_dist > 0.0 && start_dist.is_finite(),
        "starting distance must be positive and finite, got {start_dist}"
    );
    ensure!(
        perturbation_spectral >= 0.0 && noise_spectral >= 0.0 && residual_spectral >= 0.0,
        "matrix norms must be >= 0"
    );
    ensure!(
        remainder_constant >= 0.0,
        "remainder constant must be >= 0, got {remainder_constant}"
    );
    let lambda_bar = lambda / (start_dist * start_dist);
    let s = chebyshev_minimax(k, kappa, lambda_bar)?.value();
    let drift = remainder_constant
        * (start_dist * perturbation_spectral / lambda).powi(2)
        * (start_dist * start_dist / lambda);
    let acceleration = start_dist * s.sqrt() * (1.0 / (kappa * kappa) + drift).sqrt();
    let noise = noise_spectral / ((k + 1) as f64).sqrt()
        * (1.0 + residual_spectral * residual_spectral / lambda).sqrt();
    Ok(acceleration + noise)
}

/// Expected relative extrapolation error for noisy linear iterates, in terms
/// of the noise-to-distance ratio `tau` and the normalized regularization:
///
/// ```text
/// sqrt(S) sqrt(1/kappa^2 + C1 tau^2 (1+tau)^2 / lb^3)
///   + C2 sqrt(tau^2 + tau^2 (1 + tau^2) / lb)
/// ```
///
/// with `S = S(k, kappa, lb)`. `drift_constant` scales the perturbation
/// drift inside the radical and `floor_constant` the additive noise floor.
pub fn stochastic_error_bound(
    kappa: f64,
    k: usize,
    lambda_bar: f64,
    tau: f64,
    drift_constant: f64,
    floor_constant: f64,
) -> Result<f64> {
    ensure!(
        lambda_bar > 0.0 && lambda_bar.is_finite(),
        "stochastic bound needs finite normalized lambda > 0, got {lambda_bar}"
    );
    ensure!(tau >= 0.0 && tau.is_finite(), "tau must be finite and >= 0, got {tau}");
    ensure!(
        drift_constant >= 0.0 && floor_constant >= 0.0,
        "bound constants must be >= 0"
    );
    let s = chebyshev_minimax(k, kappa, lambda_bar)?.value();
    let drift = drift_constant * tau * tau * (1.0 + tau) * (1.0 + tau) / lambda_bar.powi(3);
    let acceleration = s.sqrt() * (1.0 / (kappa * kappa) + drift).sqrt();
    let floor =
        floor_constant * (tau * tau + tau * tau * (1.0 + tau * tau) / lambda_bar).sqrt();
    Ok(acceleration + floor)
}

/// Which end of its domain the scalar maximum sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqrtMaxRegime {
    /// Stationary point inside `[0, sqrt(a / lambda)]`.
    Interior,
    /// Negative slope: the maximum degenerates to the left endpoint.
    Boundary,
}

/// Maximum of `f(x) = sqrt(a - lambda x^2) / kappa + b x` on its domain.
#[derive(Debug, Clone, Copy)]
pub struct SqrtMax {
    pub x_opt: f64,
    pub f_max: f64,
    pub regime: SqrtMaxRegime,
}

/// Closed-form maximum of `sqrt(a - lambda x^2) / kappa + b x` over
/// `[0, sqrt(a / lambda)]`. For `b >= 0` the stationary point
/// `x = b sqrt(a) / sqrt(lambda^2 / kappa^2 + lambda b^2)` always lies
/// inside the domain and the maximum is
/// `sqrt(a) sqrt(1 / kappa^2 + b^2 / lambda)`; a negative slope makes `f`
/// decreasing, so the maximum sits at the left endpoint.
pub fn sqrt_fun_max(a: f64, b: f64, lambda: f64, kappa: f64) -> Result<SqrtMax> {
    ensure!(a > 0.0 && a.is_finite(), "need finite a > 0, got {a}");
    ensure!(
        lambda > 0.0 && lambda.is_finite(),
        "need finite lambda > 0, got {lambda}"
    );
    ensure!(
        kappa > 0.0 && kappa <= 1.0,
        "kappa must lie in (0, 1], got {kappa}"
    );
    ensure!(b.is_finite(), "slope must be finite, got {b}");
    if b < 0.0 {
        return Ok(SqrtMax {
            x_opt: 0.0,
            f_max: a.sqrt() / kappa,
            regime: SqrtMaxRegime::Boundary,
        });
    }
    let x_opt = b * a.sqrt() / (lambda * lambda / (kappa * kappa) + lambda * b * b).sqrt();
    let f_max = a.sqrt() * (1.0 / (kappa * kappa) + b * b / lambda).sqrt();
    Ok(SqrtMax {
        x_opt,
        f_max,
        regime: SqrtMaxRegime::Interior,
    })
}

/// Monte-Carlo sides of the triangle-plus-Jensen bound on accumulated noise:
/// the mean spectral norm of a matrix of independent draws against the sum
/// of per-column root-mean-square norms.
#[derive(Debug, Clone, Copy)]
pub struct JensenReport {
    /// Mean of `||E||_2` over trials.
    pub mean_spectral: f64,
    /// Sum over columns of `sqrt(mean ||eps_i||^2)`.
    pub column_rms_sum: f64,
}

impl JensenReport {
    pub fn margin(&self) -> f64 {
        self.column_rms_sum - self.mean_spectral
    }
}

/// Estimates both sides of `E ||E||_2 <= sum_i sqrt(E ||eps_i||^2)` from
/// `trials` independent `dim x columns` draw matrices.
pub fn jensen_noise_bound<R: Rng>(
    noise: &NoiseModel,
    dim: usize,
    columns: usize,
    trials: usize,
    rng: &mut R,
) -> Result<JensenReport> {
    ensure!(dim >= 1 && columns >= 1, "need dim >= 1 and columns >= 1");
    ensure!(trials >= 1, "need at least one trial");
    let mut spectral_sum = 0.0;
    let mut column_sq = vec![0.0; columns];
    for _ in 0..trials {
        let mut e = DMatrix::<f64>::zeros(dim, columns);
        for (i, sq) in column_sq.iter_mut().enumerate() {
            let draw = noise.draw(dim, rng);
            *sq += draw.norm_squared();
            e.set_column(i, &draw);
        }
        spectral_sum += linalg::spectral_norm(&e);
    }
    let trials_f = trials as f64;
    Ok(JensenReport {
        mean_spectral: spectral_sum / trials_f,
        column_rms_sum: column_sq.iter().map(|sq| (sq / trials_f).sqrt()).sum(),
    })
}
