//! Shared helpers for the acceptance suite, kept independent of the
//! production solvers so the checks stay dual-route.

use nalgebra::{Cholesky, DMatrix, DVector};
use rna_core::harness::TraceRecord;

/// Certified interval around the optimum of the grid-discretized problem
///
/// ```text
/// min  max_j (v_j' c)^2 + alpha ||c||^2   subject to  sum(c) = 1,
/// ```
///
/// with `v_j = (1, x_j, .., x_j^k)` on a uniform grid of `[0, 1 - kappa]`.
#[derive(Debug, Clone, Copy)]
pub struct MinimaxBracket {
    pub lower: f64,
    pub upper: f64,
}

impl MinimaxBracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Solves the discretized minimax problem by conditional gradient with away
/// steps on its concave dual
///
/// ```text
/// max_{w in simplex} phi(w),   phi(w) = 1 / (1' (M_w + alpha I)^{-1} 1),
/// M_w = sum_j w_j v_j v_j',
/// ```
///
/// using golden-section line search along each segment. Every dual point is
/// a lower bound on the optimum and every inner minimizer `c_w` is primal
/// feasible, so the returned bracket is valid no matter how far the
/// iteration got; callers assert on its width.
pub fn minimax_bracket(
    k: usize,
    kappa: f64,
    alpha: f64,
    points: usize,
    max_iters: usize,
    tol: f64,
) -> MinimaxBracket {
    assert!(kappa > 0.0 && kappa < 1.0 && alpha > 0.0 && points >= 2);
    let n = k + 1;
    let right = 1.0 - kappa;
    let vs: Vec<DVector<f64>> = (0..points)
        .map(|j| {
            let x = right * j as f64 / (points - 1) as f64;
            DVector::from_fn(n, |i, _| x.powi(i as i32))
        })
        .collect();

    // phi(w) and the inner minimizer c_w from the moment matrix of w.
    let solve = |m: &DMatrix<f64>| -> (f64, DVector<f64>) {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += alpha;
        }
        let chol = Cholesky::new(a).expect("moment matrix plus alpha I is positive definite");
        let z = chol.solve(&DVector::from_element(n, 1.0));
        let s = z.sum();
        assert!(s > 0.0, "inverse moment mass must be positive, got {s}");
        (1.0 / s, z / s)
    };

    let primal = |c: &DVector<f64>| -> f64 {
        let peak = vs
            .iter()
            .map(|v| {
                let p = v.dot(c);
                p * p
            })
            .fold(0.0, f64::max);
        peak + alpha * c.norm_squared()
    };

    let rebuild = |w: &[f64]| -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (j, &wj) in w.iter().enumerate() {
            if wj > 0.0 {
                m.ger(wj, &vs[j], &vs[j], 1.0);
            }
        }
        m
    };

    let mut w = vec![1.0 / points as f64; points];
    let mut m = rebuild(&w);
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;

    for iter in 0..max_iters {
        let (phi, c) = solve(&m);
        lower = lower.max(phi);
        upper = upper.min(primal(&c));
        if upper - lower <= tol {
            break;
        }

        // Supergradient of phi at w, up to a positive factor.
        let g: Vec<f64> = vs
            .iter()
            .map(|v| {
                let p = v.dot(&c);
                p * p
            })
            .collect();
        let gw: f64 = w.iter().zip(&g).map(|(wj, gj)| wj * gj).sum();
        let toward = (0..points)
            .max_by(|&a, &b| g[a].total_cmp(&g[b]))
            .expect("grid is non-empty");
        let away = (0..points)
            .filter(|&j| w[j] > 0.0)
            .min_by(|&a, &b| g[a].total_cmp(&g[b]))
            .expect("weights sum to one");

        if g[toward] - gw >= gw - g[away] || w[away] >= 1.0 {
            // Step toward the best vertex: M(gamma) = (1-gamma) M + gamma V.
            let v_outer = &vs[toward] * vs[toward].transpose();
            let gamma = section_max(0.0, 1.0, |gamma| {
                solve(&(&m * (1.0 - gamma) + &v_outer * gamma)).0
            });
            for wj in &mut w {
                *wj *= 1.0 - gamma;
            }
            w[toward] += gamma;
            m = &m * (1.0 - gamma) + &v_outer * gamma;
        } else {
            // Step away from the worst active vertex, at most until its
            // weight hits zero: M(gamma) = (1+gamma) M - gamma V.
            let v_outer = &vs[away] * vs[away].transpose();
            let gamma_max = w[away] / (1.0 - w[away]);
            let gamma = section_max(0.0, gamma_max, |gamma| {
                solve(&(&m * (1.0 + gamma) - &v_outer * gamma)).0
            });
            for wj in &mut w {
                *wj *= 1.0 + gamma;
            }
            w[away] = (w[away] - gamma).max(0.0);
            m = &m * (1.0 + gamma) - &v_outer * gamma;
        }

        if iter % 32 == 31 {
            m = rebuild(&w);
        }
    }

    MinimaxBracket { lower, upper }
}

/// Golden-section maximum of a concave function on `[lo, hi]`.
fn section_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Objective gap of the latest record of a cell at or before `max_queries`.
pub fn gap_at(records: &[TraceRecord], method: &str, seed: u64, max_queries: u64) -> f64 {
    records
        .iter()
        .filter(|r| r.method == method && r.seed == seed && r.data_queries <= max_queries)
        .max_by_key(|r| r.data_queries)
        .map(|r| r.objective_gap)
        .unwrap_or_else(|| panic!("no record for {method} seed {seed} by query {max_queries}"))
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
