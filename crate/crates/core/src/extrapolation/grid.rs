//! Regularization selection by safeguarded objective comparison.
//!
//! The candidate set is a small grid of relative regularizations plus the
//! window's own last iterate. Because the last iterate is always a
//! candidate, the selected point can never measure worse than not
//! extrapolating at all.

use super::{compute_residuals, rna, IterateWindow};
use crate::error::{ensure, Error, Result};
use nalgebra::DVector;

/// Relative regularization grid, descending, strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid {
    relative: Vec<f64>,
}

impl LambdaGrid {
    pub fn new(mut relative: Vec<f64>) -> Result<Self> {
        ensure!(!relative.is_empty(), "lambda grid must be non-empty");
        for &v in &relative {
            ensure!(
                v.is_finite() && v > 0.0,
                "lambda grid values must be finite and > 0, got {v}"
            );
        }
        relative.sort_by(|a, b| b.partial_cmp(a).expect("finite grid values"));
        relative.dedup();
        Ok(LambdaGrid { relative })
    }

    /// Default grid for a window of order `k`: `{1, 1e-1, .., 1e-(k-1)}`
    /// times the squared Frobenius norm of the residuals.
    pub fn logarithmic(k: usize) -> Self {
        let k = k.max(1);
        LambdaGrid {
            relative: (0..k).map(|i| 10f64.powi(-(i as i32))).collect(),
        }
    }

    pub fn relative_values(&self) -> &[f64] {
        &self.relative
    }

    pub fn len(&self) -> usize {
        self.relative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relative.is_empty()
    }
}

/// How the regularization is chosen at each extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaStrategy {
    /// One absolute value.
    Fixed(f64),
    /// One value relative to the squared Frobenius norm of the residuals.
    Relative(f64),
    /// Objective-driven search over a relative grid.
    Grid(LambdaGrid),
    /// `1e-6` times the spectral norm of `R'R`: the small-regularization
    /// protocol used by the single-lambda synthetic experiments.
    LegacySmall,
    /// `1e+6` times the spectral norm of `R'R`: the same formula read
    /// literally as a division by `1e-6`.
    LegacyLiteral,
}

/// One evaluated candidate: the absolute regularization it used and the
/// objective measured at its extrapolated point.
#[derive(Debug, Clone, Copy)]
pub struct CandidateEval {
    pub lambda: f64,
    pub objective: f64,
}

/// Outcome of a safeguarded extrapolation.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub point: DVector<f64>,
    pub objective: f64,
    /// Absolute regularization of the winning candidate; `None` when the
    /// safeguard (the window's last iterate) won.
    pub lambda: Option<f64>,
    pub candidates: Vec<CandidateEval>,
    pub safeguard_objective: f64,
}

impl Extrapolated {
    pub fn safeguard_won(&self) -> bool {
        self.lambda.is_none()
    }
}

/// Extrapolates `window` at each absolute regularization in `lambdas` and
/// returns the candidate with the smallest measured objective, keeping the
/// last iterate whenever no extrapolation strictly beats it.
pub fn safeguarded_extrapolate(
    window: &IterateWindow,
    lambdas: &[f64],
    objective: impl Fn(&DVector<f64>) -> f64,
) -> Result<Extrapolated> {
    let safeguard_objective = objective(window.last());
    let mut best_point = window.last().clone();
    let mut best_objective = safeguard_objective;
    let mut best_lambda = None;
    let mut candidates = Vec::with_capacity(lambdas.len());

    for &lambda in lambdas {
        let value = match rna(window, lambda) {
            Ok(point) => {
                let value = objective(&point);
                let improves = value.is_finite() && !(value >= best_objective);
                if improves {
                    best_point = point;
                    best_objective = value;
                    best_lambda = Some(lambda);
                }
                value
            }
            // A failed candidate participates as an unusable entry.
            Err(_) => f64::NAN,
        };
        candidates.push(CandidateEval {
            lambda,
            objective: value,
        });
    }

    if !best_objective.is_finite() {
        return Err(Error::AllCandidatesInvalid {
            candidates: lambdas.len() + 1,
        });
    }
    Ok(Extrapolated {
        point: best_point,
        objective: best_objective,
        lambda: best_lambda,
        candidates,
        safeguard_objective,
    })
}

/// Grid search over relative regularizations with the safeguard candidate
/// included. Scales each grid value by the squared Frobenius norm of the
/// window's residuals.
pub fn grid_search_lambda(
    window: &IterateWindow,
    grid: &LambdaGrid,
    objective: impl Fn(&DVector<f64>) -> f64,
) -> Result<Extrapolated> {
    let residuals = compute_residuals(window);
    let scale = residuals.frobenius_norm_sq();
    let lambdas: Vec<f64> = grid.relative_values().iter().map(|r| r * scale).collect();
    safeguarded_extrapolate(window, &lambdas, objective)
}

/// Resolves `strategy` to absolute regularizations for this window and runs
/// the safeguarded extrapolation.
pub fn extrapolate_with_strategy(
    window: &IterateWindow,
    strategy: &LambdaStrategy,
    objective: impl Fn(&DVector<f64>) -> f64,
) -> Result<Extrapolated> {
    let residuals = compute_residuals(window);
    let lambdas: Vec<f64> = match strategy {
        LambdaStrategy::Fixed(v) => vec![*v],
        LambdaStrategy::Relative(rel) => vec![rel * residuals.frobenius_norm_sq()],
        LambdaStrategy::Grid(grid) => {
            let scale = residuals.frobenius_norm_sq();
            grid.relative_values().iter().map(|r| r * scale).collect()
        }
        LambdaStrategy::LegacySmall => vec![1e-6 * residuals.gram_spectral_norm()],
        LambdaStrategy::LegacyLiteral => vec![1e6 * residuals.gram_spectral_norm()],
    };
    safeguarded_extrapolate(window, &lambdas, objective)
}
