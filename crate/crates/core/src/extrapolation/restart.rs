//! Restarted acceleration: collect a window of snapshots from an optimizer,
//! extrapolate, restart the optimizer from the selected point, repeat.

use super::{extrapolate_with_strategy, IterateWindow, LambdaStrategy};
use crate::error::{ensure, Error, Result};
use nalgebra::DVector;
use std::time::Instant;

/// Marker returned by an optimizer whose iterates blew up. Divergence is a
/// recorded outcome, not an error: the trace collected so far stays valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diverged;

/// An optimizer viewed as a stream of snapshots.
///
/// `advance` runs the method to its next snapshot (one step for plain
/// gradient methods, one table refresh plus inner loop for variance-reduced
/// ones) and accounts the data queries it consumed.
pub trait SnapshotSource {
    fn current(&self) -> &DVector<f64>;
    fn advance(&mut self) -> std::result::Result<(), Diverged>;
    fn restart(&mut self, from: DVector<f64>);
    fn queries(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// A raw optimizer snapshot.
    Snapshot,
    /// An extrapolation-and-restart point.
    Restart,
}

/// One recorded point of a restarted run.
#[derive(Debug, Clone)]
pub struct TracePoint {
    pub kind: EventKind,
    /// Cumulative data queries, including extrapolation grid passes.
    pub queries: u64,
    pub point: DVector<f64>,
    pub objective: f64,
    /// Winning regularization for restart events; `None` when the safeguard
    /// won or for plain snapshots.
    pub lambda: Option<f64>,
    /// Monotonic seconds since the loop started, covering optimizer and
    /// extrapolation work only.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub events: Vec<TracePoint>,
    pub status: RunStatus,
}

impl RestartTrace {
    pub fn restarts(&self) -> impl Iterator<Item = &TracePoint> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Restart)
    }
}

#[derive(Debug, Clone)]
pub struct RestartConfig {
    /// Window order; each extrapolation consumes `k + 1` fresh snapshots.
    pub window_k: usize,
    pub strategy: LambdaStrategy,
    /// Stop once cumulative queries (snapshots plus grid passes) reach this.
    pub budget_queries: u64,
    /// Queries charged per extrapolation for objective evaluations during
    /// candidate selection: one data pass on finite sums, zero when the
    /// objective is available in closed form.
    pub grid_pass_queries: u64,
}

impl RestartConfig {
    fn validate(&self) -> Result<()> {
        ensure!(self.window_k >= 1, "window order k must be >= 1");
        ensure!(self.budget_queries > 0, "query budget must be positive");
        Ok(())
    }
}

/// Runs the snapshot-extrapolate-restart loop until the query budget is
/// spent or the optimizer diverges.
///
/// Every snapshot and every restart is recorded. A budget smaller than one
/// window yields raw snapshots and no restarts.
pub fn restart_loop<S: SnapshotSource + ?Sized>(
    source: &mut S,
    objective: &dyn Fn(&DVector<f64>) -> f64,
    config: &RestartConfig,
) -> Result<RestartTrace> {
    config.validate()?;
    let start = Instant::now();
    let mut grid_queries: u64 = 0;
    let mut events = vec![TracePoint {
        kind: EventKind::Snapshot,
        queries: source.queries(),
        point: source.current().clone(),
        objective: objective(source.current()),
        lambda: None,
        elapsed_s: start.elapsed().as_secs_f64(),
    }];
    let mut window: Vec<DVector<f64>> = vec![source.current().clone()];

    while source.queries() + grid_queries < config.budget_queries {
        if source.advance().is_err() {
            events.push(TracePoint {
                kind: EventKind::Snapshot,
                queries: source.queries() + grid_queries,
                point: source.current().clone(),
                objective: objective(source.current()),
                lambda: None,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
            return Ok(RestartTrace {
                events,
                status: RunStatus::Diverged,
            });
        }
        window.push(source.current().clone());
        events.push(TracePoint {
            kind: EventKind::Snapshot,
            queries: source.queries() + grid_queries,
            point: source.current().clone(),
            objective: objective(source.current()),
            lambda: None,
            elapsed_s: start.elapsed().as_secs_f64(),
        });

        if window.len() == config.window_k + 2 {
            let full = IterateWindow::new(std::mem::take(&mut window))?;
            let selected = match extrapolate_with_strategy(&full, &config.strategy, objective) {
                Ok(selected) => selected,
                // Nothing measurable to restart from: close out as diverged.
                Err(Error::AllCandidatesInvalid { .. }) => {
                    return Ok(RestartTrace {
                        events,
                        status: RunStatus::Diverged,
                    })
                }
                Err(e) => return Err(e),
            };
            grid_queries += config.grid_pass_queries;
            source.restart(selected.point.clone());
            events.push(TracePoint {
                kind: EventKind::Restart,
                queries: source.queries() + grid_queries,
                point: selected.point,
                objective: selected.objective,
                lambda: selected.lambda,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
            window = vec![source.current().clone()];
        }
    }
    Ok(RestartTrace {
        events,
        status: RunStatus::Completed,
    })
}
