//! Finite-sum objectives `F(x) = 1/N sum_i loss(a_i'x, y_i) + mu/2 ||x||^2`
//! over a sparse dataset, with the component oracle used by the
//! variance-reduced methods.

use super::dataset::Dataset;
use super::Objective;
use crate::error::{ensure, Result};
use nalgebra::DVector;
use std::sync::OnceLock;

/// Per-sample loss of the prediction margin `z = a_i'x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Quadratic,
    Logistic,
}

impl Loss {
    pub fn value(self, z: f64, y: f64) -> f64 {
        match self {
            Loss::Quadratic => 0.5 * (z - y) * (z - y),
            Loss::Logistic => {
                // log(1 + exp(-yz)) without overflow on either tail.
                let m = -y * z;
                m.max(0.0) + (-m.abs()).exp().ln_1p()
            }
        }
    }

    /// d/dz of the loss; `exp` overflow saturates to the correct limit.
    pub fn slope(self, z: f64, y: f64) -> f64 {
        match self {
            Loss::Quadratic => z - y,
            Loss::Logistic => -y / (1.0 + (y * z).exp()),
        }
    }

    /// Upper bound on the second derivative in `z`; scales row norms into
    /// component smoothness constants.
    pub fn curvature_bound(self) -> f64 {
        match self {
            Loss::Quadratic => 1.0,
            Loss::Logistic => 0.25,
        }
    }
}

#[derive(Debug, Clone)]
struct Solution {
    x: DVector<f64>,
    value: f64,
}

/// Finite sum with ridge term. The minimizer is found lazily by
/// full-gradient descent to `||grad F|| <= 1e-12 L` and cached; every
/// reported objective gap uses that reference point.
#[derive(Debug)]
pub struct FiniteSumProblem {
    data: Dataset,
    loss: Loss,
    mu: f64,
    l0: f64,
    solution: OnceLock<Solution>,
}

impl Clone for FiniteSumProblem {
    fn clone(&self) -> Self {
        FiniteSumProblem {
            data: self.data.clone(),
            loss: self.loss,
            mu: self.mu,
            l0: self.l0,
            solution: self.solution.clone(),
        }
    }
}

impl FiniteSumProblem {
    pub fn new(data: Dataset, loss: Loss, mu: f64) -> Result<Self> {
        ensure!(
            mu.is_finite() && mu >= 0.0,
            "ridge weight must be finite and >= 0, got {mu}"
        );
        let l0 = loss.curvature_bound() * data.max_row_norm_squared();
        ensure!(l0 > 0.0, "dataset has no nonzero feature, smoothness is 0");
        Ok(FiniteSumProblem {
            data,
            loss,
            mu,
            l0,
            solution: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Loss derivative at sample `i`: the gradient of the un-regularized
    /// component is `slope * a_i`, so table methods only store this scalar.
    pub fn component_slope(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.loss.slope(self.data.row(i).dot(x), self.data.label(i))
    }

    pub fn component_value(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.loss.value(self.data.row(i).dot(x), self.data.label(i))
            + 0.5 * self.mu * x.norm_squared()
    }

    /// `grad f_i(x) + mu x`.
    pub fn component_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let mut g = self.mu * x;
        self.data
            .row(i)
            .add_scaled_into(self.component_slope(i, x), &mut g);
        g
    }

    fn solve(&self) -> &Solution {
        self.solution.get_or_init(|| {
            let l = self.smoothness();
            let step = 1.0 / l;
            let tol = 1e-12 * l;
            // Distance contracts by (1 - kappa) per step, so ~30/kappa
            // steps suffice from the origin; the cap is double that.
            let cap = (64.0 / self.inverse_condition()).ceil().max(10_000.0) as usize;
            let mut x = DVector::<f64>::zeros(self.dim());
            for _ in 0..cap {
                let g = self.gradient(&x);
                if g.norm() <= tol {
                    let value = self.value(&x);
                    return Solution { x, value };
                }
                x.axpy(-step, &g, 1.0);
            }
            panic!("reference solve exceeded {cap} full-gradient steps without reaching tolerance");
        })
    }
}

impl Objective for FiniteSumProblem {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let n = self.n() as f64;
        let loss_sum: f64 = (0..self.n())
            .map(|i| self.loss.value(self.data.row(i).dot(x), self.data.label(i)))
            .sum();
        loss_sum / n + 0.5 * self.mu * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = self.mu * x;
        let inv_n = 1.0 / self.n() as f64;
        for i in 0..self.n() {
            self.data
                .row(i)
                .add_scaled_into(inv_n * self.component_slope(i, x), &mut g);
        }
        g
    }

    fn smoothness(&self) -> f64 {
        self.l0 + self.mu
    }

    fn strong_convexity(&self) -> f64 {
        self.mu
    }

    fn minimizer(&self) -> &DVector<f64> {
        &self.solve().x
    }

    fn optimal_value(&self) -> f64 {
        self.solve().value
    }

    fn full_pass_queries(&self) -> u64 {
        self.n() as u64
    }
}

/// Conditioning regimes expressed as a target inverse condition number
/// relative to the sample count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditioningRegime {
    Well,
    Moderate,
    Bad,
}

impl ConditioningRegime {
    /// Target `kappa = mu / L` for `n` samples.
    pub fn kappa(self, n: usize) -> f64 {
        let n = n as f64;
        match self {
            ConditioningRegime::Well => 100.0 / n,
            ConditioningRegime::Moderate => 1.0 / n,
            ConditioningRegime::Bad => 1.0 / (100.0 * n),
        }
    }
}

/// Chooses the ridge weight so that `mu / (l0 + mu)` equals the regime's
/// kappa exactly: `mu = kappa l0 / (1 - kappa)`.
pub fn condition_setup(
    data: Dataset,
    loss: Loss,
    regime: ConditioningRegime,
) -> Result<FiniteSumProblem> {
    let kappa = regime.kappa(data.len());
    ensure!(
        kappa < 1.0,
        "regime needs kappa < 1; got kappa = {kappa} for {} samples",
        data.len()
    );
    setup_with_kappa(data, loss, kappa)
}

/// Same ridge-weight choice for an explicit target `kappa = mu / L`.
pub fn setup_with_kappa(data: Dataset, loss: Loss, kappa: f64) -> Result<FiniteSumProblem> {
    ensure!(
        kappa.is_finite() && kappa > 0.0 && kappa < 1.0,
        "inverse condition must lie in (0, 1), got {kappa}"
    );
    let l0 = loss.curvature_bound() * data.max_row_norm_squared();
    let mu = kappa * l0 / (1.0 - kappa);
    FiniteSumProblem::new(data, loss, mu)
}
