//! Fixed-step first-order methods over pluggable gradient estimators:
//! plain (S)GD, its running average, and the two-sequence momentum scheme.

use super::check_iterate;
use crate::error::{ensure, Result};
use crate::extrapolation::{Diverged, SnapshotSource};
use crate::oracles::{noisy_gradient, FiniteSumProblem, NoiseModel, Objective};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Source of (possibly stochastic) gradient estimates with its query cost.
///
/// `pass_queries` is the snapshot cadence: every optimizer built on an
/// estimator takes one snapshot per full pass, so plain methods cost `N`
/// queries per snapshot whatever the estimator.
pub trait GradientEstimator {
    fn dim(&self) -> usize;
    fn estimate(&mut self, x: &DVector<f64>) -> DVector<f64>;
    /// Queries consumed by one `estimate` call.
    fn cost(&self) -> u64;
    /// Queries making up one full data pass.
    fn pass_queries(&self) -> u64;
}

/// Deterministic full gradients; turns `Sgd` into plain gradient descent.
pub struct ExactGradient<'a, O: Objective + ?Sized>(&'a O);

impl<'a, O: Objective + ?Sized> ExactGradient<'a, O> {
    pub fn new(problem: &'a O) -> Self {
        ExactGradient(problem)
    }
}

impl<O: Objective + ?Sized> GradientEstimator for ExactGradient<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn estimate(&mut self, x: &DVector<f64>) -> DVector<f64> {
        self.0.gradient(x)
    }

    fn cost(&self) -> u64 {
        self.0.full_pass_queries()
    }

    fn pass_queries(&self) -> u64 {
        self.0.full_pass_queries()
    }
}

/// Full gradient plus one additive noise draw per estimate.
pub struct NoisyGradient<'a, O: Objective + ?Sized> {
    problem: &'a O,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl<'a, O: Objective + ?Sized> NoisyGradient<'a, O> {
    pub fn new(problem: &'a O, noise: NoiseModel, rng: ChaCha8Rng) -> Self {
        NoisyGradient {
            problem,
            noise,
            rng,
        }
    }
}

impl<O: Objective + ?Sized> GradientEstimator for NoisyGradient<'_, O> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn estimate(&mut self, x: &DVector<f64>) -> DVector<f64> {
        noisy_gradient(&self.problem.gradient(x), &self.noise, &mut self.rng)
    }

    fn cost(&self) -> u64 {
        self.problem.full_pass_queries()
    }

    fn pass_queries(&self) -> u64 {
        self.problem.full_pass_queries()
    }
}

/// Uniformly sampled component gradient of a finite sum; one query each.
pub struct ComponentGradient<'a> {
    problem: &'a FiniteSumProblem,
    rng: ChaCha8Rng,
}

impl<'a> ComponentGradient<'a> {
    pub fn new(problem: &'a FiniteSumProblem, rng: ChaCha8Rng) -> Self {
        ComponentGradient { problem, rng }
    }
}

impl GradientEstimator for ComponentGradient<'_> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn estimate(&mut self, x: &DVector<f64>) -> DVector<f64> {
        let i = self.rng.random_range(0..self.problem.n());
        self.problem.component_gradient(i, x)
    }

    fn cost(&self) -> u64 {
        1
    }

    fn pass_queries(&self) -> u64 {
        self.problem.n() as u64
    }
}

/// `x <- x - h g(x)` with a constant step. One snapshot per data pass.
pub struct Sgd<E> {
    estimator: E,
    x: DVector<f64>,
    step: f64,
    queries: u64,
}

fn validate_step(step: f64) -> Result<()> {
    ensure!(
        step.is_finite() && step > 0.0,
        "step size must be finite and > 0, got {step}"
    );
    Ok(())
}

impl<E: GradientEstimator> Sgd<E> {
    pub fn new(estimator: E, x0: DVector<f64>, step: f64) -> Result<Self> {
        validate_step(step)?;
        ensure!(
            x0.len() == estimator.dim(),
            "start point has dimension {}, problem has {}",
            x0.len(),
            estimator.dim()
        );
        Ok(Sgd {
            estimator,
            x: x0,
            step,
            queries: 0,
        })
    }

    fn one_step(&mut self) {
        let g = self.estimator.estimate(&self.x);
        self.x.axpy(-self.step, &g, 1.0);
        self.queries += self.estimator.cost();
    }
}

impl<E: GradientEstimator> SnapshotSource for Sgd<E> {
    fn current(&self) -> &DVector<f64> {
        &self.x
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        let target = self.queries + self.estimator.pass_queries();
        while self.queries < target {
            self.one_step();
        }
        check_iterate(&self.x)
    }

    fn restart(&mut self, from: DVector<f64>) {
        self.x = from;
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

/// SGD that reports the running mean of its iterates instead of the last
/// one. The mean covers every step taken since the last restart.
pub struct AveragedSgd<E> {
    estimator: E,
    x: DVector<f64>,
    mean: DVector<f64>,
    count: u64,
    step: f64,
    queries: u64,
}

impl<E: GradientEstimator> AveragedSgd<E> {
    pub fn new(estimator: E, x0: DVector<f64>, step: f64) -> Result<Self> {
        validate_step(step)?;
        ensure!(
            x0.len() == estimator.dim(),
            "start point has dimension {}, problem has {}",
            x0.len(),
            estimator.dim()
        );
        Ok(AveragedSgd {
            estimator,
            mean: x0.clone(),
            x: x0,
            count: 0,
            step,
            queries: 0,
        })
    }

    fn one_step(&mut self) {
        let g = self.estimator.estimate(&self.x);
        self.x.axpy(-self.step, &g, 1.0);
        self.queries += self.estimator.cost();
        self.count += 1;
        let delta = &self.x - &self.mean;
        self.mean.axpy(1.0 / self.count as f64, &delta, 1.0);
    }
}

impl<E: GradientEstimator> SnapshotSource for AveragedSgd<E> {
    fn current(&self) -> &DVector<f64> {
        &self.mean
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        let target = self.queries + self.estimator.pass_queries();
        while self.queries < target {
            self.one_step();
        }
        check_iterate(&self.x)?;
        check_iterate(&self.mean)
    }

    fn restart(&mut self, from: DVector<f64>) {
        self.mean = from.clone();
        self.x = from;
        self.count = 0;
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

/// Constant momentum weight `(1 - sqrt(kappa)) / (1 + sqrt(kappa))`.
pub fn nesterov_momentum(kappa: f64) -> f64 {
    let s = kappa.sqrt();
    (1.0 - s) / (1.0 + s)
}

/// Two-sequence momentum scheme
/// `x_{t+1} = y_t - h g(y_t)`, `y_{t+1} = x_{t+1} + beta (x_{t+1} - x_t)`.
///
/// Step and momentum are plain config inputs; `nesterov_momentum` gives the
/// usual constant choice.
pub struct AccSgd<E> {
    estimator: E,
    x: DVector<f64>,
    y: DVector<f64>,
    step: f64,
    momentum: f64,
    queries: u64,
}

impl<E: GradientEstimator> AccSgd<E> {
    pub fn new(estimator: E, x0: DVector<f64>, step: f64, momentum: f64) -> Result<Self> {
        validate_step(step)?;
        ensure!(
            (0.0..1.0).contains(&momentum),
            "momentum weight must lie in [0, 1), got {momentum}"
        );
        ensure!(
            x0.len() == estimator.dim(),
            "start point has dimension {}, problem has {}",
            x0.len(),
            estimator.dim()
        );
        Ok(AccSgd {
            estimator,
            y: x0.clone(),
            x: x0,
            step,
            momentum,
            queries: 0,
        })
    }

    fn one_step(&mut self) {
        let g = self.estimator.estimate(&self.y);
        let mut x_next = self.y.clone();
        x_next.axpy(-self.step, &g, 1.0);
        self.y = &x_next + self.momentum * (&x_next - &self.x);
        self.x = x_next;
        self.queries += self.estimator.cost();
    }
}

impl<E: GradientEstimator> SnapshotSource for AccSgd<E> {
    fn current(&self) -> &DVector<f64> {
        &self.x
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        let target = self.queries + self.estimator.pass_queries();
        while self.queries < target {
            self.one_step();
        }
        check_iterate(&self.y)?;
        check_iterate(&self.x)
    }

    fn restart(&mut self, from: DVector<f64>) {
        self.y = from.clone();
        self.x = from;
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}
