//! Synthetic strongly convex quadratics with a prescribed spectrum.

use super::Objective;
use crate::error::{ensure, Result};
use crate::linalg;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Eigenvalue profile of the Hessian `A'A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumSpec {
    /// i.i.d. uniform on `[kappa, 1]` with the extremes pinned to exactly
    /// `kappa` and `1`.
    Uniform { kappa: f64 },
    /// Harmonic decay `1, 1/2, .., 1/d`.
    Decay,
}

/// `F(x) = 1/2 (x - x*)' A'A (x - x*)`, minimized at `x*` with `F(x*) = 0`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    gram: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    x_star: DVector<f64>,
    x0: DVector<f64>,
    l: f64,
    mu: f64,
}

/// Builds a `d`-dimensional quadratic with the requested spectrum in a
/// seeded random orthogonal basis, `x*` standard normal, and
/// `||x0 - x*|| = radius`.
pub fn make_synthetic_quadratic(
    d: usize,
    spectrum: SpectrumSpec,
    radius: f64,
    seed: u64,
) -> Result<QuadraticProblem> {
    ensure!(d >= 2, "synthetic quadratic needs d >= 2, got {d}");
    ensure!(
        radius.is_finite() && radius > 0.0,
        "radius must be finite and > 0, got {radius}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eigenvalues = match spectrum {
        SpectrumSpec::Uniform { kappa } => {
            ensure!(
                kappa > 0.0 && kappa < 1.0,
                "uniform spectrum needs kappa in (0,1), got {kappa}"
            );
            let mut v = vec![kappa, 1.0];
            for _ in 0..d - 2 {
                v.push(kappa + (1.0 - kappa) * rng.random::<f64>());
            }
            DVector::from_vec(v)
        }
        SpectrumSpec::Decay => DVector::from_fn(d, |i, _| 1.0 / (i as f64 + 1.0)),
    };
    let basis = linalg::random_orthogonal(d, &mut rng);
    let gram = &basis * DMatrix::from_diagonal(&eigenvalues) * basis.transpose();

    let x_star = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    let direction = linalg::unit_sphere_vector(d, &mut rng);
    let x0 = &x_star + radius * direction;

    let l = eigenvalues.max();
    let mu = eigenvalues.min();
    Ok(QuadraticProblem {
        gram,
        eigenvalues,
        x_star,
        x0,
        l,
        mu,
    })
}

impl QuadraticProblem {
    /// Hessian `A'A`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Configured start point at the requested radius from `x*`.
    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    /// Target of the least-squares form, `b = A'A x*` pulled back through
    /// the gradient.
    pub fn b(&self) -> DVector<f64> {
        &self.gram * &self.x_star
    }

    /// Gradient-descent step `h = 1/L`.
    pub fn step(&self) -> f64 {
        1.0 / self.l
    }

    /// Fixed-point map Jacobian `G = I - h A'A`; symmetric with spectrum in
    /// `[0, 1 - kappa]` for `h = 1/L`.
    pub fn contraction(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::<f64>::identity(d, d) - self.step() * &self.gram
    }
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.x_star.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let centered = x - &self.x_star;
        0.5 * (&self.gram * &centered).dot(&centered)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gram * (x - &self.x_star)
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn minimizer(&self) -> &DVector<f64> {
        &self.x_star
    }

    fn optimal_value(&self) -> f64 {
        0.0
    }
}
