//! Temporary diagnostics; not part of the suite.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rna_core::extrapolation::{compute_residuals, EventKind, RestartConfig, SnapshotSource};
use rna_core::optimizers::{NoisyGradient, Saga, Sgd};
use rna_core::oracles::{setup_with_kappa, LabelKind};
use rna_core::{
    condition_setup, generate_random_dataset, make_synthetic_quadratic, restart_loop, rna,
    ConditioningRegime, DVector, IterateWindow, LambdaGrid, LambdaStrategy, Loss, NoiseModel,
    Objective, SpectrumSpec,
};

#[test]
#[ignore]
fn probe_sgd_synthetic() {
    for (label, strategy) in [
        ("legacy-small", LambdaStrategy::LegacySmall),
        ("legacy-literal", LambdaStrategy::LegacyLiteral),
        ("grid", LambdaStrategy::Grid(LambdaGrid::logarithmic(10))),
    ] {
        println!("=== strategy {label} ===");
        let problem =
            make_synthetic_quadratic(100, SpectrumSpec::Uniform { kappa: 1e-2 }, 1e4, 0).unwrap();
        let noise = NoiseModel::new(0.0, 10.0).unwrap();
        let mut src = Sgd::new(
            NoisyGradient::new(&problem, noise, ChaCha8Rng::seed_from_u64(42)),
            problem.x0().clone(),
            problem.step(),
        )
        .unwrap();
        let trace = restart_loop(
            &mut src,
            &|x| problem.gap(x),
            &RestartConfig {
                window_k: 10,
                strategy,
                budget_queries: 2000,
                grid_pass_queries: 0,
            },
        )
        .unwrap();
        for e in trace.events.iter().filter(|e| e.kind == EventKind::Restart) {
            println!(
                "  restart q={:4} gap={:10.3e} lambda={:?}",
                e.queries, e.objective, e.lambda
            );
        }
        let final_gap = trace.events.last().unwrap().objective;
        println!("  final q=2000 gap={final_gap:.3e}");
    }

    // Raw SGD reference.
    let problem =
        make_synthetic_quadratic(100, SpectrumSpec::Uniform { kappa: 1e-2 }, 1e4, 0).unwrap();
    let noise = NoiseModel::new(0.0, 10.0).unwrap();
    let mut sgd = Sgd::new(
        NoisyGradient::new(&problem, noise, ChaCha8Rng::seed_from_u64(42)),
        problem.x0().clone(),
        problem.step(),
    )
    .unwrap();
    println!("=== raw sgd ===  gap0={:.3e}", problem.gap(sgd.current()));
    for t in 1..=2000 {
        sgd.advance().unwrap();
        if t % 250 == 0 || t == 500 {
            println!("  q={t:4} gap={:.3e}", problem.gap(sgd.current()));
        }
    }
}

#[test]
#[ignore]
fn probe_saga_candidates() {
    let data = generate_random_dataset(300, 50, LabelKind::Regression, 7).unwrap();
    let problem = condition_setup(data, Loss::Quadratic, ConditioningRegime::Moderate).unwrap();
    problem.minimizer();
    let n = problem.n() as u64;

    // Raw SAGA reference.
    let mut saga = Saga::new(
        &problem,
        DVector::zeros(problem.dim()),
        ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    println!("=== raw saga === gap0={:.3e}", problem.gap(saga.current()));
    for e in 1..=30 {
        saga.advance().unwrap();
        if e % 5 == 0 {
            println!("  epoch {e:3} gap={:.3e}", problem.gap(saga.current()));
        }
    }

    // Restarted SAGA with a logging objective: every candidate evaluation
    // during selection is printed.
    let mut src = Saga::new(
        &problem,
        DVector::zeros(problem.dim()),
        ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let log = std::cell::Cell::new(false);
    let objective = |x: &DVector<f64>| {
        let g = problem.gap(x);
        if log.get() {
            println!("    cand gap={g:.3e}");
        }
        g
    };
    log.set(true);
    let trace = restart_loop(
        &mut src,
        &objective,
        &RestartConfig {
            window_k: 10,
            strategy: LambdaStrategy::Grid(LambdaGrid::logarithmic(10)),
            budget_queries: 40 * n,
            grid_pass_queries: n,
        },
    )
    .unwrap();
    log.set(false);
    for e in trace.events.iter().filter(|e| e.kind == EventKind::Restart) {
        println!(
            "  restart q={:6} epoch={:5.1} gap={:9.3e} lambda={:?}",
            e.queries,
            e.queries as f64 / n as f64,
            e.objective,
            e.lambda
        );
    }
}

#[test]
#[ignore]
fn probe_quadratic_exactness() {
    for kappa in [0.1, 0.3, 0.5, 0.7, 0.9] {
        for burn in [0usize, 5, 10, 20] {
            let problem =
                make_synthetic_quadratic(10, SpectrumSpec::Uniform { kappa }, 1.0, 303).unwrap();
            let step = problem.step();
            let mut x = problem.x0().clone();
            for _ in 0..burn {
                x -= problem.gradient(&x) * step;
            }
            let mut points = vec![x.clone()];
            for _ in 0..11 {
                x -= problem.gradient(&x) * step;
                points.push(x.clone());
            }
            let last_point = points.last().unwrap().clone();
            let window = IterateWindow::new(points).unwrap();
            let lambda = 1e-12 * compute_residuals(&window).frobenius_norm_sq();
            let out = rna(&window, lambda).unwrap();
            let d0 = (problem.x0() - problem.minimizer()).norm();
            let err = (out - problem.minimizer()).norm() / d0;
            let last = (last_point - problem.minimizer()).norm() / d0;
            println!("kappa={kappa:3.1} burn={burn:2} rna_err={err:9.2e} last_iter={last:9.2e}");
        }
    }
}

#[test]
#[ignore]
fn probe_logistic_restarts() {
    let data = generate_random_dataset(500, 50, LabelKind::Classification, 1111).unwrap();
    let problem = setup_with_kappa(data, Loss::Logistic, 1e-2).unwrap();
    let kappa = problem.inverse_condition();
    let x_star = problem.minimizer().clone();
    let step = 1.0 / problem.smoothness();
    let rate = (1.0 - kappa.sqrt()) / (1.0 + kappa.sqrt());
    let bound = rate.powi(10) / kappa;
    println!("kappa={kappa} bound={bound:.3}");

    let mut z = DVector::<f64>::zeros(problem.dim());
    for restart in 0..5 {
        let start_dist = (&z - &x_star).norm();
        let mut points = vec![z.clone()];
        for _ in 0..11 {
            let x = points.last().unwrap();
            points.push(x - problem.gradient(x) * step);
        }
        let window = IterateWindow::new(points).unwrap();
        let lambda = 1e-12 * compute_residuals(&window).frobenius_norm_sq();
        z = rna(&window, lambda).unwrap();
        let ratio = (&z - &x_star).norm() / start_dist;
        println!("  restart {restart}: start={start_dist:.3e} ratio={ratio:.3e}");
    }
}
