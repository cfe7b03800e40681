//! Monte-Carlo sweeps pairing measured quantities with their bounds.
//!
//! Each sweep returns one row per trial holding both sides of an inequality,
//! ready for CSV serialization or direct assertion. The sampled regimes are
//! deliberately wide: dimensions, window orders, conditioning, noise scales,
//! and regularizations all vary per trial.

use super::bounds::{acceleration_bound, check_stability, nonlinearity_bound};
use super::{noise_matrix, perturbation_matrix, LinearizedModel};
use crate::error::{ensure, Result};
use crate::extrapolation::{compute_residuals, extrapolate, solve_coefficients, IterateWindow};
use crate::linalg;
use crate::oracles::NoiseModel;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One verified inequality: a measured quantity against its bound.
#[derive(Debug, Clone)]
pub struct BoundCheckRow {
    pub quantity: &'static str,
    pub trial: u64,
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundCheckRow {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// Whether the inequality holds, with relative slack for rounding in the
    /// measured side.
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-9) + 1e-300
    }
}

fn random_model<R: Rng>(d: usize, kappa: f64, rng: &mut R) -> LinearizedModel {
    let q = linalg::random_orthogonal(d, rng);
    let eig = DVector::from_fn(d, |_, _| (1.0 - kappa) * rng.random::<f64>());
    let g = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    let g = (&g + g.transpose()) * 0.5;
    let x_star = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    LinearizedModel::new(g, x_star, kappa).expect("sampled spectrum stays in range")
}

fn offset_start<R: Rng>(model: &LinearizedModel, radius: f64, rng: &mut R) -> DVector<f64> {
    model.fixed_point() + radius * linalg::unit_sphere_vector(model.dim(), rng)
}

/// Weight norms of randomly drawn windows against the regularization-only
/// bound, over windows of varying dimension, order, scale, and lambda.
pub fn nonlinearity_rows(trials: usize, seed: u64) -> Vec<BoundCheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let d = rng.random_range(1..=50);
        let k = rng.random_range(0..=15);
        let scale = 10f64.powf(rng.random_range(-2.0..2.0));
        let points: Vec<DVector<f64>> = (0..k + 2)
            .map(|_| DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let r = compute_residuals(&IterateWindow::new(points).expect("valid window"));
        let lambda = r.frobenius_norm_sq() * 10f64.powf(rng.random_range(-12.0..6.0));
        let c = solve_coefficients(&r, lambda).expect("positive lambda solve");
        rows.push(BoundCheckRow {
            quantity: "weight-norm",
            trial: trial as u64,
            lhs: c.norm(),
            rhs: nonlinearity_bound(&r, lambda).expect("positive lambda"),
        });
    }
    rows
}

/// Weight shifts between exact and noisy windows against the stability
/// bound, with the regularization drawn at or above the perturbation norm.
pub fn stability_rows(trials: usize, seed: u64) -> Vec<BoundCheckRow> {
    stability_rows_scaled(trials, seed, 1.0)
}

/// Same sweep with every noise scale multiplied by `noise_scale`. At zero the
/// exact and perturbed windows coincide and both sides of every row are 0.
pub fn stability_rows_scaled(trials: usize, seed: u64, noise_scale: f64) -> Vec<BoundCheckRow> {
    assert!(
        noise_scale.is_finite() && noise_scale >= 0.0,
        "noise scale must be finite and >= 0, got {noise_scale}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let d = rng.random_range(2..=30);
        let k = rng.random_range(1..=10);
        let kappa = 10f64.powf(rng.random_range(-3.0..=-0.5));
        let model = random_model(d, kappa, &mut rng);
        let radius = 10f64.powf(rng.random_range(-1.0..2.0));
        let x0 = offset_start(&model, radius, &mut rng);

        let sigma = noise_scale * radius * 10f64.powf(rng.random_range(-6.0..-0.5));
        let nu = if rng.random::<f64>() < 0.5 { 0.0 } else { sigma / 2.0 };
        let noise = NoiseModel::new(nu, sigma).expect("nonnegative scales");

        let exact = IterateWindow::new(model.iterates(&x0, k + 1)).expect("valid window");
        let noisy = model.perturbed_iterates(&x0, k + 1, &noise, &mut rng).points;
        let noisy = IterateWindow::new(noisy).expect("valid window");

        let p = perturbation_matrix(&compute_residuals(&exact), &compute_residuals(&noisy))
            .expect("equal shapes");
        let spectral = linalg::spectral_norm(&p);
        // A zero perturbation satisfies the bound at any regularization; take
        // one at the residual scale so the solves stay well posed.
        let lambda = if spectral > 0.0 {
            spectral * 10f64.powf(rng.random_range(0.0..6.0))
        } else {
            compute_residuals(&exact).frobenius_norm_sq() * 1e-6
        };
        let report = check_stability(&exact, &noisy, lambda).expect("positive lambda");
        rows.push(BoundCheckRow {
            quantity: "weight-stability",
            trial: trial as u64,
            lhs: report.weight_shift,
            rhs: report.bound,
        });
    }
    rows
}

/// Extrapolation errors on exact linear windows against the acceleration
/// bound evaluated at the solved weight norm.
pub fn acceleration_rows(trials: usize, seed: u64) -> Vec<BoundCheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for trial in 0..trials {
        let d = rng.random_range(2..=30);
        let k = rng.random_range(1..=8);
        let kappa = 10f64.powf(rng.random_range(-2.0..=-0.5));
        let model = random_model(d, kappa, &mut rng);
        let radius = 10f64.powf(rng.random_range(-1.0..2.0));
        let x0 = offset_start(&model, radius, &mut rng);

        let window = IterateWindow::new(model.iterates(&x0, k + 1)).expect("valid window");
        let r = compute_residuals(&window);
        let lambda = r.frobenius_norm_sq() * 10f64.powf(rng.random_range(-10.0..-1.0));
        let c = solve_coefficients(&r, lambda).expect("positive lambda solve");
        let out = extrapolate(&window, &c).expect("matching weights");

        rows.push(BoundCheckRow {
            quantity: "acceleration",
            trial: trial as u64,
            lhs: (out - model.fixed_point()).norm(),
            rhs: acceleration_bound(kappa, k, lambda / (radius * radius), radius, c.norm())
                .expect("solved weights stay inside the regime"),
        });
    }
    rows
}

/// Mean norms of the noise-driven matrices at one noise scale.
#[derive(Debug, Clone, Copy)]
pub struct NoiseScalingPoint {
    pub sigma: f64,
    /// Mean spectral norm of the accumulated noise matrix over the window.
    pub mean_noise_spectral: f64,
    /// Mean spectral norm of the Gram perturbation.
    pub mean_perturbation_spectral: f64,
    /// Mean spectral-norm gap between perturbed and exact residuals.
    pub mean_residual_gap: f64,
}

/// Noise-scaling sweep: how the accumulated noise, Gram perturbation, and
/// residual gap grow as the per-step noise scale increases.
#[derive(Debug, Clone)]
pub struct NoiseScalingReport {
    pub nu: f64,
    pub points: Vec<NoiseScalingPoint>,
}

impl NoiseScalingReport {
    /// Least-squares slope of `ln mean ||E||` against `ln (nu + sigma)`;
    /// near one when the accumulated noise scales linearly.
    pub fn log_log_slope(&self) -> f64 {
        let xs: Vec<f64> = self.points.iter().map(|p| (self.nu + p.sigma).ln()).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.mean_noise_spectral.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        cov / var
    }
}

/// Runs `trials` noisy windows of order `k` at each noise scale in `sigmas`
/// and averages the norms entering the perturbation analysis.
pub fn noise_scaling_sweep(
    model: &LinearizedModel,
    x0: &DVector<f64>,
    k: usize,
    nu: f64,
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<NoiseScalingReport> {
    ensure!(trials >= 1, "need at least one trial");
    ensure!(!sigmas.is_empty(), "need at least one noise scale");
    ensure!(
        sigmas.iter().all(|&s| s > 0.0 && s.is_finite()),
        "noise scales must be positive and finite"
    );
    ensure!(
        x0.len() == model.dim(),
        "start has dimension {} but the model is {}-dimensional",
        x0.len(),
        model.dim()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exact = model.iterates(x0, k + 1);
    let exact_window = IterateWindow::new(exact.clone())?;
    let r = compute_residuals(&exact_window);
    let r_spectral = linalg::spectral_norm(r.matrix());

    let mut points = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let noise = NoiseModel::new(nu, sigma)?;
        let mut noise_sum = 0.0;
        let mut perturbation_sum = 0.0;
        let mut residual_gap_sum = 0.0;
        for _ in 0..trials {
            let run = model.perturbed_iterates(x0, k + 1, &noise, &mut rng);
            // Accumulated noise over the combination points x_0 .. x_k.
            let e = noise_matrix(&exact[..=k], &run.points[..=k])?;
            noise_sum += linalg::spectral_norm(&e);

            let rt = compute_residuals(&IterateWindow::new(run.points)?);
            let p = perturbation_matrix(&r, &rt)?;
            perturbation_sum += linalg::spectral_norm(&p);
            residual_gap_sum += (linalg::spectral_norm(rt.matrix()) - r_spectral).abs();
        }
        let trials_f = trials as f64;
        points.push(NoiseScalingPoint {
            sigma,
            mean_noise_spectral: noise_sum / trials_f,
            mean_perturbation_spectral: perturbation_sum / trials_f,
            mean_residual_gap: residual_gap_sum / trials_f,
        });
    }
    Ok(NoiseScalingReport { nu, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_norm_rows_never_violate() {
        let rows = nonlinearity_rows(300, 100);
        assert_eq!(rows.len(), 300);
        for row in &rows {
            assert!(row.holds(), "trial {}: {} > {}", row.trial, row.lhs, row.rhs);
        }
    }

    #[test]
    fn stability_rows_never_violate() {
        let rows = stability_rows(300, 200);
        for row in &rows {
            assert!(row.holds(), "trial {}: {} > {}", row.trial, row.lhs, row.rhs);
        }
    }

    #[test]
    fn acceleration_rows_never_violate() {
        let rows = acceleration_rows(150, 300);
        for row in &rows {
            assert!(row.holds(), "trial {}: {} > {}", row.trial, row.lhs, row.rhs);
        }
    }

    #[test]
    fn margin_is_rhs_minus_lhs() {
        let row = BoundCheckRow {
            quantity: "weight-norm",
            trial: 0,
            lhs: 1.0,
            rhs: 2.5,
        };
        assert_eq!(row.margin(), 1.5);
        assert!(row.holds());
    }

    #[test]
    fn accumulated_noise_scales_linearly_in_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(10, 0.1, &mut rng);
        let x0 = offset_start(&model, 10.0, &mut rng);
        let sigmas: Vec<f64> = (0..5).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let report = noise_scaling_sweep(&model, &x0, 6, 0.0, &sigmas, 400, 11).unwrap();

        let slope = report.log_log_slope();
        assert!((slope - 1.0).abs() <= 0.15, "slope {slope}");
        for pair in report.points.windows(2) {
            let ratio = pair[1].mean_noise_spectral / pair[0].mean_noise_spectral;
            assert!((ratio - 2.0).abs() <= 0.2, "doubling ratio {ratio}");
            assert!(pair[1].mean_perturbation_spectral > pair[0].mean_perturbation_spectral);
        }
    }

    #[test]
    fn vanishing_sigma_sends_the_noise_matrix_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = random_model(6, 0.2, &mut rng);
        let x0 = offset_start(&model, 1.0, &mut rng);
        let report =
            noise_scaling_sweep(&model, &x0, 4, 0.0, &[1e-9, 1e-6, 1e-3], 50, 12).unwrap();
        for point in &report.points {
            assert!(
                point.mean_noise_spectral <= 20.0 * point.sigma,
                "sigma {}: mean {}",
                point.sigma,
                point.mean_noise_spectral
            );
        }
    }

    #[test]
    fn sweep_rejects_degenerate_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = random_model(4, 0.2, &mut rng);
        let x0 = offset_start(&model, 1.0, &mut rng);
        assert!(noise_scaling_sweep(&model, &x0, 3, 0.0, &[], 10, 0).is_err());
        assert!(noise_scaling_sweep(&model, &x0, 3, 0.0, &[0.0], 10, 0).is_err());
        assert!(noise_scaling_sweep(&model, &x0, 3, 0.0, &[0.1], 0, 0).is_err());
        let short = DVector::zeros(3);
        assert!(noise_scaling_sweep(&model, &short, 3, 0.0, &[0.1], 10, 0).is_err());
    }
}
