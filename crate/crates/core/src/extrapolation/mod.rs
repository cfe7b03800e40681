//! Windowed extrapolation of optimizer iterates.
//!
//! Given a window of iterates `x0..x{k+1}` produced by some fixed-point or
//! gradient process, form the residual matrix `R` with columns
//! `r_i = x_{i+1} - x_i`, solve the regularized normalization problem
//!
//! ```text
//! c = argmin ||R c||^2 + lambda ||c||^2   subject to   sum(c) = 1,
//! ```
//!
//! and return the weighted combination `sum_i c_i x_i`. On linear iterations
//! this recovers the fixed point exactly once the window spans the active
//! spectrum; on noisy or nonlinear iterations the regularization keeps the
//! weights bounded.

mod grid;
mod restart;

pub use grid::{
    extrapolate_with_strategy, grid_search_lambda, safeguarded_extrapolate, CandidateEval,
    Extrapolated, LambdaGrid, LambdaStrategy,
};
pub use restart::{
    restart_loop, Diverged, EventKind, RestartConfig, RestartTrace, RunStatus, SnapshotSource,
    TracePoint,
};

use crate::error::{ensure, Error, Result};
use crate::linalg;
use nalgebra::{Cholesky, DMatrix, DVector};

/// Diagonal jitter added once when factorization fails, relative to the mean
/// diagonal of the Gram matrix.
const JITTER_REL: f64 = 1e-12;

/// Guard against normalizing by a sum that is pure cancellation noise.
const DEGENERATE_SUM_ULPS: f64 = 64.0;

/// A window of `k + 2` consecutive iterates of equal dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateWindow {
    points: Vec<DVector<f64>>,
}

impl IterateWindow {
    /// Builds a window from `k + 2 >= 2` points of equal dimension `d >= 1`.
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        ensure!(
            points.len() >= 2,
            "window needs at least 2 iterates, got {}",
            points.len()
        );
        let d = points[0].len();
        ensure!(d >= 1, "window iterates must have dimension >= 1");
        for (i, p) in points.iter().enumerate() {
            ensure!(
                p.len() == d,
                "window iterate {i} has dimension {} != {d}",
                p.len()
            );
        }
        Ok(IterateWindow { points })
    }

    /// Window order `k`; the window holds `k + 2` points.
    pub fn k(&self) -> usize {
        self.points.len() - 2
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn first(&self) -> &DVector<f64> {
        &self.points[0]
    }

    /// Last iterate `x_{k+1}`; the safeguard candidate during grid search.
    pub fn last(&self) -> &DVector<f64> {
        self.points.last().expect("window is non-empty")
    }

    /// The `k + 1` points entering the extrapolated combination.
    pub fn combination_points(&self) -> &[DVector<f64>] {
        &self.points[..self.points.len() - 1]
    }
}

/// Residual matrix `R`, `d x (k+1)`, column `i` holding `x_{i+1} - x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMatrix {
    matrix: DMatrix<f64>,
}

impl ResidualMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of residual columns, `k + 1`.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Squared Frobenius norm; the residual scale used for relative lambdas.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.matrix.iter().map(|x| x * x).sum()
    }

    /// Spectral norm of `R' R`, i.e. the squared top singular value of `R`.
    pub fn gram_spectral_norm(&self) -> f64 {
        let s = linalg::spectral_norm(&self.matrix);
        s * s
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&x| x == 0.0)
    }

    /// Gram matrix `R' R`, `(k+1) x (k+1)`.
    pub fn gram(&self) -> DMatrix<f64> {
        self.matrix.tr_mul(&self.matrix)
    }
}

/// Forms the residual matrix of a window by pointwise subtraction.
pub fn compute_residuals(window: &IterateWindow) -> ResidualMatrix {
    let d = window.dim();
    let cols = window.points().len() - 1;
    let mut m = DMatrix::<f64>::zeros(d, cols);
    for i in 0..cols {
        m.set_column(i, &(&window.points()[i + 1] - &window.points()[i]));
    }
    ResidualMatrix { matrix: m }
}

/// Normalized extrapolation weights together with the regularization that
/// produced them.
#[derive(Debug, Clone)]
pub struct Coefficients {
    values: DVector<f64>,
    lambda: f64,
    jitter: f64,
}

impl Coefficients {
    /// The weights `c`, length `k + 1`, summing to one.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn sum(&self) -> f64 {
        self.values.sum()
    }

    /// Regularization requested by the caller (excludes any jitter).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Diagonal jitter added to rescue a failed factorization; zero normally.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
}

/// Solves `(R'R + lambda I) z = 1` and normalizes `c = z / (1'z)`.
///
/// The system matrix is symmetric positive definite for `lambda > 0`; for
/// `lambda = 0` on rank-deficient residuals, one jitter retry of
/// `1e-12 * mean diagonal` is attempted before giving up.
pub fn solve_coefficients(residuals: &ResidualMatrix, lambda: f64) -> Result<Coefficients> {
    ensure!(
        lambda.is_finite() && lambda >= 0.0,
        "lambda must be finite and >= 0, got {lambda}"
    );
    let kp1 = residuals.cols();
    let gram = residuals.gram();

    let regularized = |shift: f64| {
        let mut m = gram.clone();
        for i in 0..kp1 {
            m[(i, i)] += shift;
        }
        m
    };

    let mut jitter = 0.0;
    let chol = match Cholesky::new(regularized(lambda)) {
        Some(c) => c,
        None => {
            jitter = JITTER_REL * gram.trace() / kp1 as f64;
            match (jitter > 0.0).then(|| Cholesky::new(regularized(lambda + jitter))) {
                Some(Some(c)) => c,
                _ => return Err(Error::SingularSystem { lambda }),
            }
        }
    };

    let ones = DVector::<f64>::repeat(kp1, 1.0);
    let z = chol.solve(&ones);
    let sum = z.sum();
    let l1: f64 = z.iter().map(|x| x.abs()).sum();
    if !sum.is_finite() || sum.abs() <= DEGENERATE_SUM_ULPS * f64::EPSILON * l1 {
        return Err(Error::DegenerateNormalization { sum });
    }
    Ok(Coefficients {
        values: z / sum,
        lambda,
        jitter,
    })
}

/// Weighted combination `sum_i c_i x_i` over the first `k + 1` window points.
pub fn extrapolate(window: &IterateWindow, coefficients: &Coefficients) -> Result<DVector<f64>> {
    let points = window.combination_points();
    ensure!(
        coefficients.len() == points.len(),
        "got {} weights for {} combination points",
        coefficients.len(),
        points.len()
    );
    let mut out = DVector::<f64>::zeros(window.dim());
    for (c, p) in coefficients.values().iter().zip(points) {
        out.axpy(*c, p, 1.0);
    }
    Ok(out)
}

/// One-shot extrapolation of a window at a fixed regularization.
///
/// A window of identical points has nothing to extrapolate; it returns `x0`
/// without solving.
pub fn rna(window: &IterateWindow, lambda: f64) -> Result<DVector<f64>> {
    let residuals = compute_residuals(window);
    if residuals.is_zero() {
        return Ok(window.first().clone());
    }
    let coefficients = solve_coefficients(&residuals, lambda)?;
    extrapolate(window, &coefficients)
}
