use std::sync::Arc;

use mialm::harness::smooth_oracle_config;
use mialm::manifold::{riemannian_gradient, StiefelPoint};
use mialm::numeric::{gaussian_matrix, DenseMatrix, RngStream};
use mialm::problems::{build_cms, build_spca, objective, CompositeProblem, ProblemSpec, SmoothFn, TraceQuadratic};
use mialm::prox::L1Norm;
use mialm::solvers::{
    augmented_lagrangian, initial_point, madmm_solve, mialm_solve, psi_euclid_grad, psi_value, rgd_bb_solve,
    trace_to_csv, InnerExit, MadmmConfig, MialmConfig, RgdOptions, SmoothObjective, Termination,
};
use mialm::Error;

/// Sum of the r smallest circulant eigenvalues (1 − cos(2πk/n))/h².
fn circulant_bottom_sum(n: usize, r: usize) -> f64 {
    let h = 50.0 / n as f64;
    let mut ev: Vec<f64> = (0..n)
        .map(|k| (1.0 - (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / (h * h))
        .collect();
    ev.sort_by(f64::total_cmp);
    ev[..r].iter().sum()
}

fn random_map_problem(seed: u64, d: usize, n: usize, r: usize, mu: f64) -> CompositeProblem {
    let mut rng = RngStream::new(seed);
    let a = gaussian_matrix(&mut rng, d, n) / (d as f64).sqrt();
    let b = gaussian_matrix(&mut rng, n, n);
    let q = (&b + b.transpose()) * 0.5;
    let spec = ProblemSpec::Custom { name: "random-map".into(), n, r, mu };
    CompositeProblem::new(
        spec,
        n,
        r,
        Some(a),
        Arc::new(TraceQuadratic { q }),
        Arc::new(L1Norm::new(mu).unwrap()),
        mu,
        2.0,
    )
    .unwrap()
}

#[test]
fn mialm_smooth_limit_matches_eigenvalues() {
    for &(n, r) in &[(64, 2), (96, 4)] {
        let p = build_cms(n, r, 0.0).unwrap();
        let res = mialm_solve(&p, &smooth_oracle_config(), &initial_point(n, r, 2).unwrap()).unwrap();
        assert!((res.objective - circulant_bottom_sum(n, r)).abs() < 1e-6);
        assert!(res.kkt.feasibility <= 1e-6);
    }
}

#[test]
fn madmm_smooth_limit_matches_eigenvalues() {
    // With g = 0 the first Y step returns AX − Λ/β = X, so each MADMM solve
    // stops after one proximal step on f. Restarting from the result runs the
    // manifold proximal point iteration, which reaches the eigenvalue optimum.
    let p = build_cms(64, 3, 0.0).unwrap();
    let cfg = MadmmConfig { beta: Some(0.05), inner_tol: 1e-9, inner_max_iters: 100_000, ..Default::default() };
    let target = circulant_bottom_sum(64, 3);
    let mut x = initial_point(64, 3, 4).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let res = madmm_solve(&p, &cfg, &x).unwrap();
        assert_eq!(res.outer_iters, 1);
        assert_eq!(res.termination, Termination::Feasible);
        assert!(res.objective <= last + 1e-12);
        last = res.objective;
        x = res.x;
        if (last - target).abs() < 1e-6 {
            break;
        }
    }
    assert!((last - target).abs() < 1e-6, "{last} vs {target}");
}

#[test]
fn rgd_solves_unregularized_subproblem() {
    struct Psi<'a>(&'a CompositeProblem, DenseMatrix);
    impl SmoothObjective for Psi<'_> {
        fn value(&self, x: &DenseMatrix) -> mialm::Result<f64> {
            psi_value(self.0, 5.0, &self.1, x)
        }
        fn value_and_grad(&self, x: &DenseMatrix) -> mialm::Result<(f64, DenseMatrix)> {
            Ok((psi_value(self.0, 5.0, &self.1, x)?, psi_euclid_grad(self.0, 5.0, &self.1, x)?))
        }
    }
    let p = build_cms(48, 2, 0.0).unwrap();
    let obj = Psi(&p, DenseMatrix::zeros(48, 2));
    let out = rgd_bb_solve(&obj, &initial_point(48, 2, 9).unwrap(), 1e-7, 50_000, &RgdOptions::default()).unwrap();
    assert_eq!(out.exit, InnerExit::Tolerance);
    assert!((out.value - circulant_bottom_sum(48, 2)).abs() < 1e-6);
    assert!(out.values.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn algorithm_mechanics_hold_on_cms_trace() {
    let p = build_cms(64, 2, 0.2).unwrap();
    let cfg = MialmConfig { record_iterates: true, ..Default::default() };
    let res = mialm_solve(&p, &cfg, &initial_point(64, 2, 1).unwrap()).unwrap();
    assert_eq!(res.termination, Termination::Feasible);
    for (i, row) in res.trace.iter().enumerate() {
        assert_eq!(row.k, i);
        assert_eq!(row.eps, 1e-5f64.max(0.9f64.powi(i as i32)));
        let keep = row.residual_inf <= cfg.tau * row.residual_prev;
        assert_eq!(row.rho_next, if keep { row.rho } else { cfg.sigma * row.rho });
        if let Some(next) = res.trace.get(i + 1) {
            assert_eq!(next.rho, row.rho_next);
            assert_eq!(next.residual_prev, row.residual_inf);
        }
        assert!(row.z_bar_min >= cfg.z_min && row.z_bar_max <= cfg.z_max);
        assert!(row.stiefel_feasibility <= 1e-10);
        if row.inner_exit == InnerExit::Tolerance {
            assert!(row.inner_grad_norm <= row.eps);
        }
        let snap = row.snapshot.as_ref().unwrap();
        let psi = psi_value(&p, row.rho, &snap.z_used, &snap.x).unwrap();
        let lag = augmented_lagrangian(&p, row.rho, &snap.z_used, &snap.x, &snap.y).unwrap();
        assert!((psi - lag).abs() <= 1e-10 * psi.abs().max(1.0));
    }
    let csv = trace_to_csv(&res.trace);
    assert_eq!(csv.lines().count(), res.trace.len() + 1);
    assert!(csv.starts_with("k,F,feasibility,rho,eps,inner_iters,elapsed\n"));
}

#[test]
fn y_step_minimizes_the_augmented_lagrangian() {
    let p = build_cms(32, 2, 0.3).unwrap();
    let cfg = MialmConfig { record_iterates: true, max_outer: 5, ..Default::default() };
    let res = mialm_solve(&p, &cfg, &initial_point(32, 2, 5).unwrap()).unwrap();
    let mut rng = RngStream::new(77);
    for row in &res.trace {
        let snap = row.snapshot.as_ref().unwrap();
        let base = augmented_lagrangian(&p, row.rho, &snap.z_used, &snap.x, &snap.y).unwrap();
        for _ in 0..100 {
            let scale = 10f64.powi(-(1 + (rng.uniform() * 5.0) as i32));
            let y = &snap.y + gaussian_matrix(&mut rng, 32, 2) * scale;
            let perturbed = augmented_lagrangian(&p, row.rho, &snap.z_used, &snap.x, &y).unwrap();
            assert!(perturbed >= base - 1e-10);
        }
    }
}

#[test]
fn psi_matches_entrywise_grid_minimum() {
    // L_ρ is separable in the entries of Y, so ψ is a sum of 1-D minima.
    let p = random_map_problem(3, 3, 4, 2, 0.4);
    let rho = 1.7;
    let x = initial_point(4, 2, 8).unwrap().into_inner();
    let z = gaussian_matrix(&mut RngStream::new(4), 3, 2) * 0.5;
    let ax = p.apply_a(&x);
    let mut total = p.f_value(&x);
    for (&axi, &zi) in ax.iter().zip(z.iter()) {
        total += (0..=160_000)
            .map(|i| -4.0 + i as f64 * 5e-5)
            .map(|y| 0.4 * f64::abs(y) - zi * (axi - y) + 0.5 * rho * (axi - y).powi(2))
            .fold(f64::INFINITY, f64::min);
    }
    assert!((psi_value(&p, rho, &z, &x).unwrap() - total).abs() < 1e-4);
}

#[test]
fn psi_gradient_with_general_linear_map() {
    let p = random_map_problem(11, 5, 6, 2, 0.3);
    let rho = 2.3;
    let z = gaussian_matrix(&mut RngStream::new(12), 5, 2) * 0.2;
    for s in 0..20 {
        let x = initial_point(6, 2, 100 + s).unwrap().into_inner();
        let g = psi_euclid_grad(&p, rho, &z, &x).unwrap();
        let h = 1e-6;
        let mut fd = DenseMatrix::zeros(6, 2);
        for j in 0..2 {
            for i in 0..6 {
                let mut up = x.clone();
                let mut dn = x.clone();
                up[(i, j)] += h;
                dn[(i, j)] -= h;
                fd[(i, j)] = (psi_value(&p, rho, &z, &up).unwrap() - psi_value(&p, rho, &z, &dn).unwrap()) / (2.0 * h);
            }
        }
        assert!((&fd - &g).norm() / g.norm() < 1e-6);
    }
}

#[test]
fn mialm_handles_general_linear_map() {
    let p = random_map_problem(21, 8, 6, 2, 0.1);
    let res = mialm_solve(&p, &MialmConfig::default(), &initial_point(6, 2, 3).unwrap()).unwrap();
    assert_eq!(res.termination, Termination::Feasible);
    assert!(res.kkt.feasibility <= 1e-4);
    assert!(res.kkt.subdiff <= 1e-8);
    assert!(res.x.feasibility() <= 1e-10);
}

#[test]
fn kkt_is_small_on_spca() {
    let p = build_spca(30, 60, 2, 0.5, 3).unwrap();
    let res = mialm_solve(&p, &MialmConfig { outer_tol: 1e-8, ..Default::default() }, &initial_point(60, 2, 3).unwrap())
        .unwrap();
    assert_eq!(res.termination, Termination::Feasible);
    assert!(res.kkt.subdiff <= 1e-3 && res.kkt.feasibility <= 1e-3);
    let direct = objective(&p, res.x.value()).unwrap();
    assert_eq!(direct, res.objective);
}

#[derive(Debug)]
struct Exploding;
impl SmoothFn for Exploding {
    fn value(&self, x: &DenseMatrix) -> f64 {
        if x[(0, 0)].abs() > 0.9 { f64::NAN } else { -x[(0, 0)] }
    }
    fn grad(&self, x: &DenseMatrix) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(x.nrows(), x.ncols());
        g[(0, 0)] = if x[(0, 0)].abs() > 0.9 { f64::NAN } else { -1.0 };
        g
    }
}

#[test]
fn numerical_failure_carries_iterate() {
    let spec = ProblemSpec::Custom { name: "nan".into(), n: 3, r: 1, mu: 0.0 };
    let p = CompositeProblem::new(spec, 3, 1, None, Arc::new(Exploding), Arc::new(L1Norm::new(0.0).unwrap()), 0.0, 1.0)
        .unwrap();
    let x0 = StiefelPoint::new(DenseMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0])).unwrap();
    match mialm_solve(&p, &MialmConfig::default(), &x0) {
        Err(Error::NumericalFailure { context, .. }) => assert_eq!(context.iterate.shape(), (3, 1)),
        other => panic!("expected numerical failure, got {other:?}"),
    }
}

#[test]
fn result_gradient_matches_inner_certificate() {
    // ∇ψ at X^{k+1} equals ∇f − A'Z^{k+1}, so KKT stationarity is the last inner gradient norm.
    let p = build_cms(64, 2, 0.1).unwrap();
    let res = mialm_solve(&p, &MialmConfig::default(), &initial_point(64, 2, 6).unwrap()).unwrap();
    let grad = riemannian_gradient(&res.x, &(p.f_grad(res.x.value()) - &res.z)).unwrap();
    assert!((grad.norm() - res.kkt.stationarity).abs() < 1e-12);
    let last = res.trace.last().unwrap();
    assert!((last.inner_grad_norm - res.kkt.stationarity).abs() < 1e-9);
}
