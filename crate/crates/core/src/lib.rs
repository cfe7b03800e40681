//! Regularized nonlinear acceleration for stochastic optimizers.
//!
//! The crate wraps iterative optimizers with a windowed extrapolation step:
//! it records snapshots of the iterate sequence, solves a small regularized
//! least-squares problem for combination weights that sum to one, and
//! restarts the optimizer from the weighted combination. A safeguarded grid
//! search over the regularization keeps the scheme no worse than the raw
//! method on the measured objective.
//!
//! Modules:
//!
//! * [`extrapolation`]: residual windows, the regularized coefficient solve,
//!   safeguarded grid search, and the restart loop.
//! * [`oracles`]: synthetic quadratics with controlled spectra, finite-sum
//!   problems (quadratic and logistic losses), additive noise models, and a
//!   libsvm-format reader.
//! * [`optimizers`]: gradient descent, SGD variants, SAGA, SVRG, and
//!   Katyusha, all exposed as snapshot streams with exact query accounting.
//! * [`theory`]: evaluators and Monte-Carlo verifiers for the stability,
//!   nonlinearity, and acceleration bounds that govern the extrapolation,
//!   plus the regularized Chebyshev minimax solver behind the rate
//!   constants.
//! * [`harness`]: config-driven experiment runner with CSV traces, a trace
//!   summarizer, and the bound-verification report.

pub mod error;
pub mod extrapolation;
pub mod harness;
pub mod linalg;
pub mod optimizers;
pub mod oracles;
pub mod theory;

pub use error::{Error, Result};
pub use extrapolation::{
    grid_search_lambda, restart_loop, rna, solve_coefficients, Coefficients, IterateWindow,
    LambdaGrid, LambdaStrategy, ResidualMatrix, RestartConfig, RestartTrace,
};
pub use nalgebra::{DMatrix, DVector};
pub use optimizers::{BaseMethod, MethodKind, SnapshotSchedule};
pub use oracles::{
    condition_setup, generate_random_dataset, load_libsvm, make_synthetic_quadratic,
    noisy_gradient, ConditioningRegime, Dataset, FiniteSumProblem, Loss, NoiseModel, Objective,
    QuadraticProblem, SpectrumSpec,
};
pub use theory::{
    acceleration_bound, chebyshev_minimax, nonlinearity_bound, sqrt_fun_max, stability_bound,
    ChebyshevSolution, LinearizedModel, SqrtMax, StochasticRegime,
};
