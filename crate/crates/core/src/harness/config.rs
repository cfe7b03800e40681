//! TOML experiment configs.
//!
//! A config names one problem, the methods to run on it, the extrapolation
//! window and regularization strategy, a budget, the seeds, and where the
//! trace goes. Parsing is strict about field names on the top level and
//! validates cross-field rules (budget given exactly one way, conditioning
//! given exactly one way, finite-sum methods only on finite-sum problems).

use crate::error::{ensure, Error, Result};
use crate::extrapolation::{LambdaGrid, LambdaStrategy};
use crate::optimizers::MethodKind;
use crate::oracles::{ConditioningRegime, Loss};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer};
use std::path::{Path, PathBuf};

/// One experiment: every (method, seed) cell runs on the same problem
/// specification under the same budget.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    #[serde(deserialize_with = "parse_methods")]
    pub methods: Vec<MethodKind>,
    /// Extrapolation window order `k`; each restart consumes `k + 2` points.
    pub window_k: usize,
    pub lambda: LambdaSelection,
    pub budget: Budget,
    pub seeds: Vec<u64>,
    /// Trace destination; optional so in-memory runs can omit it.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        // An unreadable config is an input problem, not a runtime failure.
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.window_k >= 1, "window_k must be >= 1");
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("method {m} listed twice")));
            }
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return Err(Error::Config(format!("seed {s} listed twice")));
            }
        }
        self.budget.validate()?;
        self.lambda.validate()?;
        self.problem.validate()?;
        if !self.problem.is_finite_sum() {
            if let Some(m) = self.methods.iter().find(|m| m.base.needs_finite_sum()) {
                return Err(Error::Config(format!(
                    "method {m} needs per-component access; the problem is not a finite sum"
                )));
            }
        }
        Ok(())
    }
}

/// What to optimize. Synthetic quadratics are rebuilt per seed; finite sums
/// are built once and shared by every cell.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemSpec {
    /// Random least squares with a controlled spectrum and additive gradient
    /// noise.
    Synthetic {
        d: usize,
        spectrum: SpectrumKind,
        /// Inverse condition number; required by `uniform`, forbidden by
        /// `decay` which fixes its own spectrum.
        #[serde(default)]
        kappa: Option<f64>,
        /// Per-draw standard deviation of the gradient noise.
        sigma: f64,
        /// Bias bound of the gradient noise; defaults to 0.
        #[serde(default)]
        nu: Option<f64>,
        /// Starting distance from the minimizer.
        radius: f64,
    },
    /// Finite sum over rows of a libsvm-format file.
    Dataset {
        path: PathBuf,
        loss: LossKind,
        #[serde(default)]
        regime: Option<RegimeKind>,
        #[serde(default)]
        kappa: Option<f64>,
    },
    /// Finite sum over a generated random dataset. `data_seed` is
    /// independent of the cell seeds: every cell sees the same data.
    Generated {
        n: usize,
        d: usize,
        loss: LossKind,
        #[serde(default)]
        regime: Option<RegimeKind>,
        #[serde(default)]
        kappa: Option<f64>,
        #[serde(default)]
        data_seed: u64,
    },
}

impl ProblemSpec {
    pub fn is_finite_sum(&self) -> bool {
        !matches!(self, ProblemSpec::Synthetic { .. })
    }

    fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Synthetic {
                d,
                spectrum,
                kappa,
                sigma,
                nu,
                radius,
            } => {
                ensure!(*d >= 2, "synthetic problems need d >= 2, got {d}");
                match (spectrum, kappa) {
                    (SpectrumKind::Uniform, None) => {
                        return Err(Error::Config("uniform spectrum needs kappa".into()))
                    }
                    (SpectrumKind::Uniform, Some(k)) => {
                        ensure!(
                            k.is_finite() && *k > 0.0 && *k < 1.0,
                            "kappa must lie in (0, 1), got {k}"
                        );
                    }
                    (SpectrumKind::Decay, Some(_)) => {
                        return Err(Error::Config(
                            "decay spectrum fixes its own conditioning; drop kappa".into(),
                        ))
                    }
                    (SpectrumKind::Decay, None) => {}
                }
                ensure!(
                    sigma.is_finite() && *sigma >= 0.0,
                    "sigma must be finite and >= 0, got {sigma}"
                );
                if let Some(nu) = nu {
                    ensure!(
                        nu.is_finite() && *nu >= 0.0,
                        "nu must be finite and >= 0, got {nu}"
                    );
                }
                ensure!(
                    radius.is_finite() && *radius > 0.0,
                    "radius must be finite and > 0, got {radius}"
                );
            }
            ProblemSpec::Dataset { regime, kappa, .. } => {
                validate_conditioning(regime, kappa)?;
            }
            ProblemSpec::Generated {
                n, d, regime, kappa, ..
            } => {
                ensure!(*n >= 1 && *d >= 1, "generated data needs n >= 1 and d >= 1");
                validate_conditioning(regime, kappa)?;
            }
        }
        Ok(())
    }
}

fn validate_conditioning(regime: &Option<RegimeKind>, kappa: &Option<f64>) -> Result<()> {
    match (regime, kappa) {
        (Some(_), Some(_)) => Err(Error::Config(
            "set either regime or kappa, not both".into(),
        )),
        (None, None) => Err(Error::Config("set a conditioning regime or kappa".into())),
        (None, Some(k)) => {
            ensure!(
                k.is_finite() && *k > 0.0 && *k < 1.0,
                "kappa must lie in (0, 1), got {k}"
            );
            Ok(())
        }
        (Some(_), None) => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Uniform,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Quadratic,
    Logistic,
}

impl LossKind {
    pub fn to_loss(self) -> Loss {
        match self {
            LossKind::Quadratic => Loss::Quadratic,
            LossKind::Logistic => Loss::Logistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    Well,
    Moderate,
    Bad,
}

impl RegimeKind {
    pub fn to_regime(self) -> ConditioningRegime {
        match self {
            RegimeKind::Well => ConditioningRegime::Well,
            RegimeKind::Moderate => ConditioningRegime::Moderate,
            RegimeKind::Bad => ConditioningRegime::Bad,
        }
    }
}

/// Regularization selection for the extrapolation step.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum LambdaSelection {
    /// One absolute value.
    Fixed { value: f64 },
    /// One value relative to the squared Frobenius norm of the residuals.
    Relative { value: f64 },
    /// Safeguarded search over a log-spaced relative grid; `size` defaults
    /// to the window order.
    Grid {
        #[serde(default)]
        size: Option<usize>,
    },
    /// The single small relative value of the original single-lambda
    /// synthetic protocol.
    #[serde(rename = "legacy-6.1", alias = "legacy")]
    Legacy,
}

impl LambdaSelection {
    pub fn to_strategy(&self, window_k: usize) -> LambdaStrategy {
        match self {
            LambdaSelection::Fixed { value } => LambdaStrategy::Fixed(*value),
            LambdaSelection::Relative { value } => LambdaStrategy::Relative(*value),
            LambdaSelection::Grid { size } => {
                LambdaStrategy::Grid(LambdaGrid::logarithmic(size.unwrap_or(window_k)))
            }
            LambdaSelection::Legacy => LambdaStrategy::LegacySmall,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            LambdaSelection::Fixed { value } | LambdaSelection::Relative { value } => {
                ensure!(
                    value.is_finite() && *value > 0.0,
                    "lambda must be finite and > 0, got {value}"
                );
            }
            LambdaSelection::Grid { size: Some(size) } => {
                ensure!(*size >= 1, "lambda grid size must be >= 1");
            }
            _ => {}
        }
        Ok(())
    }
}

/// Run length, as full data passes or raw queries. Exactly one must be set.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default)]
    pub epochs: Option<f64>,
    #[serde(default)]
    pub queries: Option<u64>,
}

impl Budget {
    pub fn from_epochs(epochs: f64) -> Self {
        Budget {
            epochs: Some(epochs),
            queries: None,
        }
    }

    pub fn from_queries(queries: u64) -> Self {
        Budget {
            epochs: None,
            queries: Some(queries),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.epochs, self.queries) {
            (Some(_), Some(_)) => Err(Error::Config(
                "budget sets both epochs and queries; pick one".into(),
            )),
            (None, None) => Err(Error::Config("budget needs epochs or queries".into())),
            (Some(e), None) => {
                ensure!(
                    e.is_finite() && e > 0.0,
                    "budget epochs must be finite and > 0, got {e}"
                );
                Ok(())
            }
            (None, Some(q)) => {
                ensure!(q > 0, "budget queries must be > 0");
                Ok(())
            }
        }
    }

    /// Total query budget given the cost of one full data pass.
    pub fn resolve(&self, pass_queries: u64) -> u64 {
        match (self.epochs, self.queries) {
            (_, Some(q)) => q,
            (Some(e), None) => (e * pass_queries as f64).round() as u64,
            (None, None) => unreachable!("budget was validated"),
        }
    }
}

fn parse_methods<'de, D: Deserializer<'de>>(
    de: D,
) -> std::result::Result<Vec<MethodKind>, D::Error> {
    let names = Vec::<String>::deserialize(de)?;
    names
        .iter()
        .map(|name| name.parse().map_err(D::Error::custom))
        .collect()
}
