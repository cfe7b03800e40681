//! Regularized Chebyshev minimax on `[0, 1 - kappa]`.
//!
//! The acceleration analysis prices a window of order `k` on a contraction
//! with inverse condition number `kappa` through
//!
//! ```text
//! S(k, kappa, alpha) = min  max_{x in [0, 1-kappa]} p(x)^2 + alpha ||p||^2
//! ```
//!
//! over degree-`k` polynomials with `p(1) = 1`, where `||p||` is the
//! Euclidean norm of the monomial coefficients. The inner maximum is
//! discretized on a uniform grid and the outer minimization solved as a
//! small quadratic program in epigraph form: a level variable `t` majorizes
//! `|p(x_j)|` at every grid point and `t^2 + alpha ||c||^2` is minimized
//! subject to the normalization.
//!
//! The reported value is recomputed from the returned feasible coefficients
//! on a denser grid, so it is always an upper value of the discretized
//! optimum: downstream error bounds that consume it stay valid upper bounds
//! even when the solve terminates early.

use crate::error::{ensure, Result};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SupportedConeT};
use nalgebra::{DMatrix, DVector};

/// Grid points discretizing the inner maximum during the solve.
const GRID_POINTS: usize = 2000;

/// Refinement factor for the grid on which the reported value is recomputed.
const REPORT_REFINEMENT: usize = 4;

/// Optimal weights of the regularized minimax problem and their objective.
#[derive(Debug, Clone)]
pub struct ChebyshevSolution {
    value: f64,
    coefficients: DVector<f64>,
}

impl ChebyshevSolution {
    /// The minimax value `S(k, kappa, alpha)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Monomial coefficients `c_0 .. c_k` of the optimal polynomial.
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Evaluates the optimal polynomial at `x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        horner(&self.coefficients, x)
    }
}

/// Solves the regularized minimax problem for a degree-`k` polynomial on
/// `[0, 1 - kappa]` with coefficient penalty `alpha`.
pub fn chebyshev_minimax(k: usize, kappa: f64, alpha: f64) -> Result<ChebyshevSolution> {
    ensure!(
        kappa > 0.0 && kappa < 1.0,
        "kappa must lie in (0, 1), got {kappa}"
    );
    ensure!(
        alpha.is_finite() && alpha >= 0.0,
        "alpha must be finite and >= 0, got {alpha}"
    );

    // p = 1 is the only degree-zero polynomial with p(1) = 1.
    if k == 0 {
        return Ok(ChebyshevSolution {
            value: 1.0 + alpha,
            coefficients: DVector::from_element(1, 1.0),
        });
    }

    let xs = grid(kappa, GRID_POINTS);
    let mut c = solve_grid_qp(k, alpha, &xs);
    let sum = c.sum();
    if sum != 0.0 {
        c /= sum;
    }

    // Honest reported value: the objective of the returned weights
    // recomputed on a denser grid.
    let fine = grid(kappa, REPORT_REFINEMENT * (GRID_POINTS - 1) + 1);
    let peak = fine
        .iter()
        .map(|&x| {
            let p = horner(&c, x);
            p * p
        })
        .fold(0.0, f64::max);
    let value = peak + alpha * c.norm_squared();
    Ok(ChebyshevSolution {
        value,
        coefficients: c,
    })
}

fn grid(kappa: f64, points: usize) -> Vec<f64> {
    let right = 1.0 - kappa;
    (0..points)
        .map(|j| right * j as f64 / (points - 1) as f64)
        .collect()
}

fn horner(c: &DVector<f64>, x: f64) -> f64 {
    let mut acc = 0.0;
    for i in (0..c.len()).rev() {
        acc = acc * x + c[i];
    }
    acc
}

/// Minimizes `t^2 + alpha ||c||^2` over `(c_0, .., c_k, t)` subject to
/// `sum(c) = 1` and `|p_c(x_j)| <= t` on the grid, the absolute value split
/// into the row pair `p_c(x_j) - t <= 0` and `-p_c(x_j) - t <= 0`.
fn solve_grid_qp(k: usize, alpha: f64, xs: &[f64]) -> DVector<f64> {
    let m = xs.len();
    let n = k + 2;

    // Row j of the evaluation matrix holds (1, x_j, .., x_j^k).
    let mut eval = DMatrix::<f64>::zeros(m, k + 1);
    for (j, &x) in xs.iter().enumerate() {
        let mut pw = 1.0;
        for i in 0..=k {
            eval[(j, i)] = pw;
            pw *= x;
        }
    }

    let quad = CscMatrix::new(
        n,
        n,
        (0..=n).collect(),
        (0..n).collect(),
        (0..n)
            .map(|i| if i == n - 1 { 2.0 } else { 2.0 * alpha })
            .collect(),
    );
    let linear = vec![0.0; n];

    // Constraint row 0 pins sum(c) = 1; rows 1..=m majorize p(x_j) by t and
    // rows m+1..=2m majorize -p(x_j). Column-major with ascending rows.
    let nnz = (2 * m + 1) * (k + 1) + 2 * m;
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::with_capacity(nnz);
    let mut nzval = Vec::with_capacity(nnz);
    colptr.push(0);
    for i in 0..=k {
        rowval.push(0);
        nzval.push(1.0);
        for j in 0..m {
            rowval.push(1 + j);
            nzval.push(eval[(j, i)]);
        }
        for j in 0..m {
            rowval.push(1 + m + j);
            nzval.push(-eval[(j, i)]);
        }
        colptr.push(rowval.len());
    }
    for j in 0..2 * m {
        rowval.push(1 + j);
        nzval.push(-1.0);
    }
    colptr.push(rowval.len());
    let matrix = CscMatrix::new(2 * m + 1, n, colptr, rowval, nzval);

    let mut rhs = vec![0.0; 2 * m + 1];
    rhs[0] = 1.0;
    let cones = [
        SupportedConeT::ZeroConeT(1),
        SupportedConeT::NonnegativeConeT(2 * m),
    ];

    let settings = DefaultSettingsBuilder::<f64>::default()
        .verbose(false)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .build()
        .expect("static solver settings are valid");
    let mut solver = DefaultSolver::new(&quad, &linear, &matrix, &rhs, &cones, settings)
        .expect("epigraph program dimensions are consistent");
    solver.solve();
    DVector::from_iterator(k + 1, solver.solution.x[..=k].iter().copied())
}
