//! Linear iterate models and the error bounds that govern extrapolating them.
//!
//! The extrapolation analysis works on sequences of the form
//!
//! ```text
//! x_{t+1} = x* + G (x_t - x*) + eps_{t+1}
//! ```
//!
//! with `G` symmetric and `0 <= G <= (1 - kappa) I`. This module holds the
//! model itself, the accumulated-noise and Gram-perturbation matrices the
//! bounds are stated in, closed-form evaluators for those bounds, the
//! regularized Chebyshev minimax problem pricing the acceleration term, and
//! Monte-Carlo sweeps that pair measured quantities with their bounds.

mod bounds;
mod chebyshev;
mod verify;

pub use bounds::{
    acceleration_bound, check_stability, combined_error_bound, jensen_noise_bound,
    nonlinearity_bound, sqrt_fun_max, stability_bound, stochastic_error_bound,
    CombinedBoundInputs, JensenReport, SqrtMax, SqrtMaxRegime, StabilityReport,
};
pub use chebyshev::{chebyshev_minimax, ChebyshevSolution};
pub use verify::{
    acceleration_rows, noise_scaling_sweep, nonlinearity_rows, stability_rows,
    stability_rows_scaled, BoundCheckRow, NoiseScalingPoint, NoiseScalingReport,
};

use crate::error::{ensure, Result};
use crate::extrapolation::ResidualMatrix;
use crate::oracles::{NoiseModel, Objective, QuadraticProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Allowed asymmetry in the linear map, relative to its largest entry.
const SYMMETRY_TOL: f64 = 1e-12;

/// Slack when checking that the spectrum sits inside `[0, 1 - kappa]`; covers
/// rounding in maps assembled from eigendecompositions.
const SPECTRUM_TOL: f64 = 1e-9;

/// A contraction `x -> x* + G (x - x*)` with symmetric `G` whose spectrum
/// lies in `[0, 1 - kappa]`.
#[derive(Debug, Clone)]
pub struct LinearizedModel {
    g: DMatrix<f64>,
    x_star: DVector<f64>,
    kappa: f64,
}

impl LinearizedModel {
    pub fn new(g: DMatrix<f64>, x_star: DVector<f64>, kappa: f64) -> Result<Self> {
        ensure!(
            g.nrows() == g.ncols(),
            "linear map must be square, got {}x{}",
            g.nrows(),
            g.ncols()
        );
        ensure!(
            g.nrows() == x_star.len(),
            "fixed point has dimension {} but the map is {}x{}",
            x_star.len(),
            g.nrows(),
            g.ncols()
        );
        ensure!(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0, 1], got {kappa}");
        let scale = g.amax().max(1.0);
        for i in 0..g.nrows() {
            for j in 0..i {
                ensure!(
                    (g[(i, j)] - g[(j, i)]).abs() <= SYMMETRY_TOL * scale,
                    "map entry ({i}, {j}) differs from its transpose by {:e}",
                    (g[(i, j)] - g[(j, i)]).abs()
                );
            }
        }
        let eigenvalues = g.clone().symmetric_eigen().eigenvalues;
        let lo = eigenvalues.min();
        let hi = eigenvalues.max();
        let slack = SPECTRUM_TOL * scale;
        ensure!(
            lo >= -slack && hi <= 1.0 - kappa + slack,
            "spectrum [{lo}, {hi}] escapes [0, {}]",
            1.0 - kappa
        );
        Ok(LinearizedModel { g, x_star, kappa })
    }

    /// The fixed-point map of gradient descent with step `1/L` on a quadratic.
    pub fn from_quadratic(problem: &QuadraticProblem) -> Self {
        LinearizedModel::new(
            problem.contraction(),
            problem.minimizer().clone(),
            problem.inverse_condition(),
        )
        .expect("the contraction of a valid quadratic is a valid linear model")
    }

    pub fn dim(&self) -> usize {
        self.x_star.len()
    }

    pub fn map(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn fixed_point(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// One application `x* + G (x - x*)`.
    pub fn step(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.x_star + &self.g * (x - &self.x_star)
    }

    /// The exact recursion from `x0`: `steps + 1` points `x_0 .. x_steps`.
    pub fn iterates(&self, x0: &DVector<f64>, steps: usize) -> Vec<DVector<f64>> {
        let mut points = Vec::with_capacity(steps + 1);
        points.push(x0.clone());
        for _ in 0..steps {
            let next = self.step(points.last().expect("points is non-empty"));
            points.push(next);
        }
        points
    }

    /// The recursion with an additive draw after each application. Returns
    /// the perturbed points together with the draws that produced them.
    pub fn perturbed_iterates<R: Rng>(
        &self,
        x0: &DVector<f64>,
        steps: usize,
        noise: &NoiseModel,
        rng: &mut R,
    ) -> PerturbedSequence {
        let mut points = Vec::with_capacity(steps + 1);
        let mut draws = Vec::with_capacity(steps);
        points.push(x0.clone());
        for _ in 0..steps {
            let draw = noise.draw(self.dim(), rng);
            let next = self.step(points.last().expect("points is non-empty")) + &draw;
            points.push(next);
            draws.push(draw);
        }
        PerturbedSequence { points, draws }
    }
}

/// A noisy run of a linear recursion: the points `x~_0 .. x~_steps` and the
/// draw added at each application, `draws[t] = eps_{t+1}`.
#[derive(Debug, Clone)]
pub struct PerturbedSequence {
    pub points: Vec<DVector<f64>>,
    pub draws: Vec<DVector<f64>>,
}

/// Accumulated perturbation between two equally long sequences: column `i`
/// holds `perturbed[i] - exact[i]`, so with shared starts column 0 is zero.
///
/// The bounds only consume norms of this matrix, which are sign invariant;
/// this orientation is the one under which the column recursion
/// `E_{t+1} = G E_t + eps_{t+1}` and the residual identity
/// `R~_t = R_t + E_{t+1} - E_t` hold without sign flips.
pub fn noise_matrix(exact: &[DVector<f64>], perturbed: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    ensure!(
        exact.len() == perturbed.len() && !exact.is_empty(),
        "need two equally long non-empty sequences, got {} and {}",
        exact.len(),
        perturbed.len()
    );
    let d = exact[0].len();
    for (i, (a, b)) in exact.iter().zip(perturbed).enumerate() {
        ensure!(
            a.len() == d && b.len() == d,
            "sequence entry {i} has mismatched dimension"
        );
    }
    let mut m = DMatrix::<f64>::zeros(d, exact.len());
    for (i, (a, b)) in exact.iter().zip(perturbed).enumerate() {
        m.set_column(i, &(b - a));
    }
    Ok(m)
}

/// Gram perturbation `P = R'R - R~'R~` between exact and perturbed residuals.
pub fn perturbation_matrix(
    exact: &ResidualMatrix,
    perturbed: &ResidualMatrix,
) -> Result<DMatrix<f64>> {
    ensure!(
        exact.matrix().shape() == perturbed.matrix().shape(),
        "residual shapes differ: {:?} vs {:?}",
        exact.matrix().shape(),
        perturbed.matrix().shape()
    );
    Ok(exact.gram() - perturbed.gram())
}

/// Noise scales of a perturbed run, normalized by its starting distance.
#[derive(Debug, Clone, Copy)]
pub struct StochasticRegime {
    nu: f64,
    sigma: f64,
    start_dist: f64,
}

impl StochasticRegime {
    /// `nu` bounds the mean of each draw, `sigma^2` its total variance, and
    /// `start_dist` is `||x0 - x*||`.
    pub fn new(nu: f64, sigma: f64, start_dist: f64) -> Result<Self> {
        ensure!(nu >= 0.0 && sigma >= 0.0, "noise scales must be >= 0");
        ensure!(
            start_dist > 0.0 && start_dist.is_finite(),
            "starting distance must be positive and finite, got {start_dist}"
        );
        Ok(StochasticRegime { nu, sigma, start_dist })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn start_dist(&self) -> f64 {
        self.start_dist
    }

    /// Relative noise level `(nu + sigma) / ||x0 - x*||`.
    pub fn tau(&self) -> f64 {
        (self.nu + self.sigma) / self.start_dist
    }

    /// Regularization normalized by the squared starting distance.
    pub fn normalized_lambda(&self, lambda: f64) -> f64 {
        lambda / (self.start_dist * self.start_dist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extrapolation::{compute_residuals, IterateWindow};
    use crate::linalg;
    use crate::oracles::{make_synthetic_quadratic, SpectrumSpec};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_model(seed: u64, d: usize, kappa: f64) -> LinearizedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = linalg::random_orthogonal(d, &mut rng);
        let eig = DVector::from_fn(d, |_, _| (1.0 - kappa) * rng.random::<f64>());
        let g = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        // Symmetrize: the triple product drifts off symmetry by rounding.
        let g = (&g + g.transpose()) * 0.5;
        let x_star = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        LinearizedModel::new(g, x_star, kappa).unwrap()
    }

    #[test]
    fn model_rejects_bad_shapes_and_spectra() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 0.0, 0.5]);
        assert!(LinearizedModel::new(asym, DVector::zeros(2), 0.1).is_err());

        let expanding = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.95, 0.2]));
        assert!(LinearizedModel::new(expanding, DVector::zeros(2), 0.1).is_err());

        let negative = DMatrix::from_diagonal(&DVector::from_row_slice(&[-0.1, 0.2]));
        assert!(LinearizedModel::new(negative, DVector::zeros(2), 0.1).is_err());

        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(LinearizedModel::new(rect, DVector::zeros(2), 0.1).is_err());

        let ok = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.9, 0.2]));
        assert!(LinearizedModel::new(ok.clone(), DVector::zeros(3), 0.1).is_err());
        assert!(LinearizedModel::new(ok, DVector::zeros(2), 0.1).is_ok());
    }

    #[test]
    fn iterates_match_the_spectral_closed_form() {
        // x_t - x* = Q diag(mu^t) Q' (x0 - x*), checked in the eigenbasis.
        let d = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = linalg::random_orthogonal(d, &mut rng);
        let eig = DVector::from_fn(d, |i, _| 0.85 * (i as f64 + 1.0) / d as f64);
        let g = &q * DMatrix::from_diagonal(&eig) * q.transpose();
        let g = (&g + g.transpose()) * 0.5;
        let x_star = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        let model = LinearizedModel::new(g, x_star.clone(), 0.1).unwrap();

        let x0 = &x_star + DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let points = model.iterates(&x0, 20);
        assert_eq!(points.len(), 21);
        let coords = q.transpose() * (&x0 - &x_star);
        for (t, point) in points.iter().enumerate() {
            let powered = DVector::from_fn(d, |i, _| eig[i].powi(t as i32) * coords[i]);
            let expected = &x_star + &q * powered;
            assert_relative_eq!(point, &expected, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn scalar_noise_columns_accumulate_through_the_map() {
        // G = 0.5, x* = 0, x0 = 0; draws 1 then 0 give perturbed points
        // (0, 1, 0.5), so the gap columns are 0, eps_1, G eps_1.
        let exact = vec![DVector::zeros(1); 3];
        let perturbed = vec![
            DVector::zeros(1),
            DVector::from_row_slice(&[1.0]),
            DVector::from_row_slice(&[0.5]),
        ];
        let e = noise_matrix(&exact, &perturbed).unwrap();
        assert_eq!(e.shape(), (1, 3));
        assert_eq!(e[(0, 0)], 0.0);
        assert_eq!(e[(0, 1)], 1.0);
        assert_eq!(e[(0, 2)], 0.5);
    }

    #[test]
    fn dyadic_noise_recursion_and_residual_identity_are_exact() {
        // Dyadic map, start, and draws keep every product and difference
        // exactly representable, so the recursion and the residual identity
        // must hold bitwise.
        let g = DMatrix::from_diagonal(&DVector::from_row_slice(&[0.5, 0.25]));
        let x_star = DVector::from_row_slice(&[1.0, -2.0]);
        let model = LinearizedModel::new(g.clone(), x_star, 0.5).unwrap();
        let x0 = DVector::from_row_slice(&[3.0, 2.0]);
        let draws = [
            DVector::from_row_slice(&[1.0, 0.5]),
            DVector::from_row_slice(&[-0.25, 2.0]),
            DVector::from_row_slice(&[0.125, -1.0]),
        ];

        let exact = model.iterates(&x0, 3);
        let mut perturbed = vec![x0.clone()];
        for draw in &draws {
            let next = model.step(perturbed.last().unwrap()) + draw;
            perturbed.push(next);
        }

        let e = noise_matrix(&exact, &perturbed).unwrap();
        assert_eq!(e.column(0), DVector::zeros(2).column(0));
        for t in 0..3 {
            let propagated = &g * e.column(t) + &draws[t];
            assert_eq!(e.column(t + 1), propagated.column(0), "column {}", t + 1);
        }

        let r = compute_residuals(&IterateWindow::new(exact).unwrap());
        let rt = compute_residuals(&IterateWindow::new(perturbed).unwrap());
        for t in 0..3 {
            let rebuilt = r.matrix().column(t) + e.column(t + 1) - e.column(t);
            assert_eq!(rt.matrix().column(t), rebuilt.column(0), "residual {t}");
        }
    }

    #[test]
    fn random_noise_recursion_holds_to_rounding() {
        let model = random_model(11, 6, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x0 = model.fixed_point() + DVector::from_fn(6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = NoiseModel::new(0.1, 0.5).unwrap();
        let run = model.perturbed_iterates(&x0, 8, &noise, &mut rng);
        let exact = model.iterates(&x0, 8);
        let e = noise_matrix(&exact, &run.points).unwrap();
        for t in 0..8 {
            let propagated = model.map() * e.column(t) + &run.draws[t];
            let drift = (e.column(t + 1) - propagated).norm();
            assert!(drift <= 1e-12 * (1.0 + e.column(t + 1).norm()), "drift {drift:e}");
        }
    }

    #[test]
    fn zero_noise_run_reproduces_the_exact_iterates() {
        let model = random_model(4, 5, 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x0 = DVector::from_fn(5, |_, _| rng.sample::<f64, _>(StandardNormal));
        let run = model.perturbed_iterates(&x0, 6, &NoiseModel::none(), &mut rng);
        assert_eq!(run.points, model.iterates(&x0, 6));
        assert!(run.draws.iter().all(|d| d.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn identical_windows_have_zero_perturbation() {
        let model = random_model(7, 4, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x0 = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let points = model.iterates(&x0, 5);
        let r = compute_residuals(&IterateWindow::new(points).unwrap());
        let p = perturbation_matrix(&r, &r.clone()).unwrap();
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn perturbation_matrix_rejects_mismatched_shapes() {
        let a = compute_residuals(
            &IterateWindow::new(vec![DVector::zeros(2), DVector::from_row_slice(&[1.0, 0.0])])
                .unwrap(),
        );
        let b = compute_residuals(
            &IterateWindow::new(vec![
                DVector::zeros(2),
                DVector::from_row_slice(&[1.0, 0.0]),
                DVector::from_row_slice(&[1.0, 1.0]),
            ])
            .unwrap(),
        );
        assert!(perturbation_matrix(&a, &b).is_err());
    }

    #[test]
    fn quadratic_contraction_step_matches_gradient_descent() {
        let problem = make_synthetic_quadratic(12, SpectrumSpec::Uniform { kappa: 0.05 }, 2.0, 17)
            .unwrap();
        let model = LinearizedModel::from_quadratic(&problem);
        assert_eq!(model.kappa(), problem.inverse_condition());
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let x = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let gd = &x - problem.gradient(&x) * problem.step();
        let drift = (model.step(&x) - gd).norm();
        assert!(drift <= 1e-12 * (1.0 + x.norm()), "drift {drift:e}");
    }

    #[test]
    fn regime_ratios_and_validation() {
        let regime = StochasticRegime::new(0.5, 1.5, 4.0).unwrap();
        assert_eq!(regime.tau(), 0.5);
        assert_eq!(regime.normalized_lambda(8.0), 0.5);
        assert!(StochasticRegime::new(-0.1, 0.0, 1.0).is_err());
        assert!(StochasticRegime::new(0.0, -1.0, 1.0).is_err());
        assert!(StochasticRegime::new(0.0, 0.0, 0.0).is_err());
    }
}
