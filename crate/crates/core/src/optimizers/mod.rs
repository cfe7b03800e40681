//! Reference optimizers exposed as snapshot streams.
//!
//! Every method implements [`SnapshotSource`](crate::extrapolation::SnapshotSource):
//! one `advance` runs the method up to its next snapshot and accounts the
//! data queries consumed, so the restart loop and the trace writer see a
//! uniform interface. Query costs follow the per-method schedules in
//! [`SnapshotSchedule`].

mod first_order;
mod variance_reduced;

pub use first_order::{
    nesterov_momentum, AccSgd, AveragedSgd, ComponentGradient, ExactGradient, GradientEstimator,
    NoisyGradient, Sgd,
};
pub use variance_reduced::{AnchorRule, Katyusha, KatyushaParams, Saga, Svrg};

use crate::error::{Error, Result};
use crate::extrapolation::Diverged;
use crate::linalg;
use nalgebra::DVector;
use std::fmt;
use std::str::FromStr;

/// Iterates past this norm are treated as diverged rather than letting
/// later arithmetic drown in infinities.
pub const DIVERGENCE_NORM: f64 = 1e15;

pub(crate) fn check_iterate(x: &DVector<f64>) -> std::result::Result<(), Diverged> {
    if linalg::all_finite(x) && x.norm() <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Diverged)
    }
}

/// The underlying optimizer, before any acceleration wrapper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseMethod {
    Gd,
    Sgd,
    AvgSgd,
    AccSgd,
    Saga,
    Svrg,
    Katyusha,
}

impl BaseMethod {
    pub const ALL: [BaseMethod; 7] = [
        BaseMethod::Gd,
        BaseMethod::Sgd,
        BaseMethod::AvgSgd,
        BaseMethod::AccSgd,
        BaseMethod::Saga,
        BaseMethod::Svrg,
        BaseMethod::Katyusha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaseMethod::Gd => "gd",
            BaseMethod::Sgd => "sgd",
            BaseMethod::AvgSgd => "avg-sgd",
            BaseMethod::AccSgd => "acc-sgd",
            BaseMethod::Saga => "saga",
            BaseMethod::Svrg => "svrg",
            BaseMethod::Katyusha => "katyusha",
        }
    }

    /// Table and anchor methods need per-component access.
    pub fn needs_finite_sum(self) -> bool {
        matches!(self, BaseMethod::Saga | BaseMethod::Svrg | BaseMethod::Katyusha)
    }

    /// Stable RNG stream id. The accelerated variant of a method shares the
    /// stream of its base so both see identical randomness until the first
    /// restart changes the trajectory.
    pub fn stream_id(self) -> u64 {
        Self::ALL.iter().position(|m| *m == self).unwrap() as u64
    }

    pub fn schedule(self, n: u64) -> SnapshotSchedule {
        let (init, between) = match self {
            BaseMethod::Gd | BaseMethod::Sgd | BaseMethod::AvgSgd | BaseMethod::AccSgd => (0, n),
            BaseMethod::Saga => (n, n),
            BaseMethod::Svrg => (0, 2 * n),
            BaseMethod::Katyusha => (0, 3 * n),
        };
        SnapshotSchedule {
            init_queries: init,
            queries_between_snapshots: between,
        }
    }
}

/// A method cell in an experiment: base optimizer, optionally wrapped in
/// the extrapolate-and-restart scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MethodKind {
    pub base: BaseMethod,
    pub accelerated: bool,
}

impl MethodKind {
    pub fn raw(base: BaseMethod) -> Self {
        MethodKind {
            base,
            accelerated: false,
        }
    }

    pub fn rna(base: BaseMethod) -> Self {
        MethodKind {
            base,
            accelerated: true,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.accelerated {
            write!(f, "rna-{}", self.base.name())
        } else {
            f.write_str(self.base.name())
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (accelerated, base_name) = match s.strip_prefix("rna-") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let base = BaseMethod::ALL
            .into_iter()
            .find(|m| m.name() == base_name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method {s:?}")))?;
        Ok(MethodKind { base, accelerated })
    }
}

/// Data-query accounting per snapshot stream.
///
/// `cost_for(k)` is the total cost of the initial table work plus `k`
/// snapshot advances: plain gradient methods pay `kN`, SAGA `(k+1)N` (the
/// extra pass fills its table), SVRG `2kN` (anchor pass plus inner loop per
/// snapshot), Katyusha `3kN` (anchor pass plus a double-length inner loop).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotSchedule {
    pub init_queries: u64,
    pub queries_between_snapshots: u64,
}

impl SnapshotSchedule {
    pub fn cost_for(&self, snapshots: u64) -> u64 {
        self.init_queries + snapshots * self.queries_between_snapshots
    }
}
