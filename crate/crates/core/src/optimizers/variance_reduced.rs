//! Variance-reduced finite-sum methods. All three exploit that component
//! gradients of linear models are `slope * a_i`, so stored state is one
//! scalar per sample instead of one vector.

use super::check_iterate;
use crate::error::{ensure, Result};
use crate::extrapolation::{Diverged, SnapshotSource};
use crate::oracles::{FiniteSumProblem, Objective};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn default_step(problem: &FiniteSumProblem) -> f64 {
    1.0 / (3.0 * problem.smoothness())
}

fn validate_start(problem: &FiniteSumProblem, x0: &DVector<f64>, step: f64) -> Result<()> {
    ensure!(
        step.is_finite() && step > 0.0,
        "step size must be finite and > 0, got {step}"
    );
    ensure!(
        x0.len() == problem.dim(),
        "start point has dimension {}, problem has {}",
        x0.len(),
        problem.dim()
    );
    Ok(())
}

/// SAGA with a scalar gradient table. Construction performs the initial
/// table-filling pass (N queries); every snapshot costs N more, so k
/// snapshots total (k+1)N.
pub struct Saga<'a> {
    problem: &'a FiniteSumProblem,
    rng: ChaCha8Rng,
    x: DVector<f64>,
    slopes: Vec<f64>,
    /// `(1/N) sum_i slopes[i] a_i`, maintained incrementally.
    table_mean: DVector<f64>,
    scratch: DVector<f64>,
    step: f64,
    queries: u64,
}

impl<'a> Saga<'a> {
    pub fn new(problem: &'a FiniteSumProblem, x0: DVector<f64>, rng: ChaCha8Rng) -> Result<Self> {
        Self::with_step(problem, x0, default_step(problem), rng)
    }

    pub fn with_step(
        problem: &'a FiniteSumProblem,
        x0: DVector<f64>,
        step: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        validate_start(problem, &x0, step)?;
        let d = problem.dim();
        let mut saga = Saga {
            problem,
            rng,
            x: x0,
            slopes: vec![0.0; problem.n()],
            table_mean: DVector::zeros(d),
            scratch: DVector::zeros(d),
            step,
            queries: 0,
        };
        saga.fill_table();
        Ok(saga)
    }

    /// One full pass refreshing every table entry at the current point.
    fn fill_table(&mut self) {
        let problem = self.problem;
        let n = problem.n();
        self.table_mean.fill(0.0);
        for i in 0..n {
            let s = problem.component_slope(i, &self.x);
            self.slopes[i] = s;
            problem
                .data()
                .row(i)
                .add_scaled_into(s / n as f64, &mut self.table_mean);
        }
        self.queries += n as u64;
    }

    fn one_step(&mut self) {
        let problem = self.problem;
        let n = problem.n();
        let i = self.rng.random_range(0..n);
        let s_new = problem.component_slope(i, &self.x);
        let s_old = self.slopes[i];
        // g = (s_new - s_old) a_i + table mean + mu x
        self.scratch.copy_from(&self.table_mean);
        self.scratch.axpy(problem.mu(), &self.x, 1.0);
        problem
            .data()
            .row(i)
            .add_scaled_into(s_new - s_old, &mut self.scratch);
        self.x.axpy(-self.step, &self.scratch, 1.0);
        problem
            .data()
            .row(i)
            .add_scaled_into((s_new - s_old) / n as f64, &mut self.table_mean);
        self.slopes[i] = s_new;
        self.queries += 1;
    }

    #[cfg(test)]
    fn table(&self) -> (&[f64], &DVector<f64>) {
        (&self.slopes, &self.table_mean)
    }
}

impl SnapshotSource for Saga<'_> {
    fn current(&self) -> &DVector<f64> {
        &self.x
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        for _ in 0..self.problem.n() {
            self.one_step();
        }
        check_iterate(&self.x)
    }

    fn restart(&mut self, from: DVector<f64>) {
        self.x = from;
        // A fresh window gets a coherent table; the pass is charged like
        // the one at construction.
        self.fill_table();
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}

/// What becomes the next anchor after an inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorRule {
    LastIterate,
    InnerAverage,
}

/// SVRG with scalar anchor state. One snapshot per round; a round is one
/// anchor pass (N queries) plus an N-step inner loop (N queries), so k
/// snapshots cost 2kN.
pub struct Svrg<'a> {
    problem: &'a FiniteSumProblem,
    rng: ChaCha8Rng,
    x: DVector<f64>,
    anchor_rule: AnchorRule,
    anchor_slopes: Vec<f64>,
    /// `(1/N) sum_i anchor_slopes[i] a_i` for the current anchor.
    loss_mean: DVector<f64>,
    inner_sum: DVector<f64>,
    scratch: DVector<f64>,
    step: f64,
    queries: u64,
}

impl<'a> Svrg<'a> {
    pub fn new(problem: &'a FiniteSumProblem, x0: DVector<f64>, rng: ChaCha8Rng) -> Result<Self> {
        Self::with_step(problem, x0, default_step(problem), rng)
    }

    pub fn with_step(
        problem: &'a FiniteSumProblem,
        x0: DVector<f64>,
        step: f64,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        validate_start(problem, &x0, step)?;
        let d = problem.dim();
        Ok(Svrg {
            problem,
            rng,
            x: x0,
            anchor_rule: AnchorRule::LastIterate,
            anchor_slopes: vec![0.0; problem.n()],
            loss_mean: DVector::zeros(d),
            inner_sum: DVector::zeros(d),
            scratch: DVector::zeros(d),
            step,
            queries: 0,
        })
    }

    pub fn anchor_rule(mut self, rule: AnchorRule) -> Self {
        self.anchor_rule = rule;
        self
    }
}

impl SnapshotSource for Svrg<'_> {
    fn current(&self) -> &DVector<f64> {
        &self.x
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        let problem = self.problem;
        let n = problem.n();
        // Anchor pass at the current point. The control variate is
        // g = (slope(x) - anchor slope) a_i + mu x + loss mean, whose
        // expectation is the exact gradient at x.
        self.loss_mean.fill(0.0);
        for i in 0..n {
            let s = problem.component_slope(i, &self.x);
            self.anchor_slopes[i] = s;
            problem
                .data()
                .row(i)
                .add_scaled_into(s / n as f64, &mut self.loss_mean);
        }
        self.queries += n as u64;

        let average = self.anchor_rule == AnchorRule::InnerAverage;
        if average {
            self.inner_sum.fill(0.0);
        }
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            let s = problem.component_slope(i, &self.x);
            self.scratch.copy_from(&self.loss_mean);
            self.scratch.axpy(problem.mu(), &self.x, 1.0);
            problem
                .data()
                .row(i)
                .add_scaled_into(s - self.anchor_slopes[i], &mut self.scratch);
            self.x.axpy(-self.step, &self.scratch, 1.0);
            if average {
                self.inner_sum += &self.x;
            }
            self.queries += 1;
        }
        if average {
            self.x.copy_from(&self.inner_sum);
            self.x /= n as f64;
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

/// Katyusha round structure: three coupled sequences with negative momentum
/// toward the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatyushaParams {
    /// Weight of the `z` sequence in the query point.
    pub tau1: f64,
    /// Weight of the anchor in the query point (the negative momentum).
    pub tau2: f64,
    /// Step for the `y` update; the `z` step is `step / tau1`.
    pub step: f64,
    /// Inner loop length in data passes; 2 gives the 3N-per-snapshot cost.
    pub inner_passes: usize,
}

impl KatyushaParams {
    pub fn defaults(problem: &FiniteSumProblem) -> Self {
        let n = problem.n() as f64;
        let kappa = problem.inverse_condition();
        KatyushaParams {
            tau1: ((n * kappa).sqrt() / 2.0).min(0.5),
            tau2: 0.5,
            step: default_step(problem),
            inner_passes: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(
            (0.0..=1.0).contains(&self.tau1)
                && (0.0..=1.0).contains(&self.tau2)
                && self.tau1 + self.tau2 <= 1.0,
            "momentum weights must satisfy tau1, tau2 >= 0 and tau1 + tau2 <= 1"
        );
        ensure!(
            self.step.is_finite() && self.step > 0.0,
            "step size must be finite and > 0, got {}",
            self.step
        );
        ensure!(self.inner_passes >= 1, "inner loop needs at least one pass");
        Ok(())
    }
}

/// Katyusha with scalar anchor state. One snapshot per round: anchor pass
/// (N) plus a 2N-step inner loop (2N), so k snapshots cost 3kN.
pub struct Katyusha<'a> {
    problem: &'a FiniteSumProblem,
    rng: ChaCha8Rng,
    params: KatyushaParams,
    anchor: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    anchor_slopes: Vec<f64>,
    loss_mean: DVector<f64>,
    x_j: DVector<f64>,
    y_sum: DVector<f64>,
    scratch: DVector<f64>,
    queries: u64,
}

impl<'a> Katyusha<'a> {
    pub fn new(problem: &'a FiniteSumProblem, x0: DVector<f64>, rng: ChaCha8Rng) -> Result<Self> {
        Self::with_params(problem, x0, KatyushaParams::defaults(problem), rng)
    }

    pub fn with_params(
        problem: &'a FiniteSumProblem,
        x0: DVector<f64>,
        params: KatyushaParams,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        params.validate()?;
        validate_start(problem, &x0, params.step)?;
        let d = problem.dim();
        Ok(Katyusha {
            problem,
            rng,
            params,
            anchor: x0.clone(),
            y: x0.clone(),
            z: x0,
            anchor_slopes: vec![0.0; problem.n()],
            loss_mean: DVector::zeros(d),
            x_j: DVector::zeros(d),
            y_sum: DVector::zeros(d),
            scratch: DVector::zeros(d),
            queries: 0,
        })
    }
}

impl SnapshotSource for Katyusha<'_> {
    fn current(&self) -> &DVector<f64> {
        &self.anchor
    }

    fn advance(&mut self) -> std::result::Result<(), Diverged> {
        let problem = self.problem;
        let n = problem.n();
        let p = self.params;
        self.loss_mean.fill(0.0);
        for i in 0..n {
            let s = problem.component_slope(i, &self.anchor);
            self.anchor_slopes[i] = s;
            problem
                .data()
                .row(i)
                .add_scaled_into(s / n as f64, &mut self.loss_mean);
        }
        self.queries += n as u64;

        let m = p.inner_passes * n;
        self.y_sum.fill(0.0);
        for _ in 0..m {
            // Query point x_j = tau1 z + tau2 anchor + (1 - tau1 - tau2) y.
            self.x_j.copy_from(&self.y);
            self.x_j *= 1.0 - p.tau1 - p.tau2;
            self.x_j.axpy(p.tau1, &self.z, 1.0);
            self.x_j.axpy(p.tau2, &self.anchor, 1.0);

            let i = self.rng.random_range(0..n);
            let s = problem.component_slope(i, &self.x_j);
            self.scratch.copy_from(&self.loss_mean);
            self.scratch.axpy(problem.mu(), &self.x_j, 1.0);
            problem
                .data()
                .row(i)
                .add_scaled_into(s - self.anchor_slopes[i], &mut self.scratch);

            if p.tau1 > 0.0 {
                self.z.axpy(-(p.step / p.tau1), &self.scratch, 1.0);
            }
            self.y.copy_from(&self.x_j);
            self.y.axpy(-p.step, &self.scratch, 1.0);
            self.y_sum += &self.y;
            self.queries += 1;
        }
        self.anchor.copy_from(&self.y_sum);
        self.anchor /= m as f64;
        check_iterate(&self.y)?;
        check_iterate(&self.z)?;
        check_iterate(&self.anchor)
    }

    fn restart(&mut self, from: DVector<f64>) {
        self.anchor.copy_from(&from);
        self.y.copy_from(&from);
        self.z = from;
    }

    fn queries(&self) -> u64 {
        self.queries
    }
}
