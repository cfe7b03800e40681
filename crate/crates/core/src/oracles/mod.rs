//! Objective functions and first-order oracles: synthetic quadratics with a
//! controlled spectrum, finite sums of quadratic or logistic losses with an
//! l2 ridge, additive gradient noise, and libsvm-format dataset ingestion.

mod dataset;
mod finite_sum;
mod noise;
mod quadratic;

pub use dataset::{generate_random_dataset, load_libsvm, save_libsvm, Dataset, LabelKind, SparseRow};
pub use finite_sum::{condition_setup, setup_with_kappa, ConditioningRegime, FiniteSumProblem, Loss};
pub use noise::{noisy_gradient, NoiseFamily, NoiseModel};
pub use quadratic::{make_synthetic_quadratic, QuadraticProblem, SpectrumSpec};

use nalgebra::DVector;

/// A smooth strongly convex objective with a known minimizer.
///
/// `minimizer` may trigger a one-time high-accuracy solve on first call;
/// problems are immutable afterwards and safe to share across threads.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Smoothness constant `L` used for step sizes.
    fn smoothness(&self) -> f64;

    /// Strong convexity constant `mu > 0`.
    fn strong_convexity(&self) -> f64;

    fn minimizer(&self) -> &DVector<f64>;

    fn optimal_value(&self) -> f64;

    /// Inverse condition number `mu / L`.
    fn inverse_condition(&self) -> f64 {
        self.strong_convexity() / self.smoothness()
    }

    /// Suboptimality `F(x) - F(x*)`.
    fn gap(&self, x: &DVector<f64>) -> f64 {
        self.value(x) - self.optimal_value()
    }

    /// Data queries charged for one full gradient: `N` on finite sums, one
    /// otherwise.
    fn full_pass_queries(&self) -> u64 {
        1
    }
}
