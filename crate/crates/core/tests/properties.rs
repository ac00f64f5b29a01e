use proptest::prelude::*;

use mialm::manifold::{retract_qr, stiefel_feasibility, tangent_project, StiefelPoint};
use mialm::numeric::{gaussian_matrix, inner, lambda_max_sym, qr_positive, DenseMatrix, RngStream};
use mialm::problems::{build_cms, objective, schrodinger_operator, sparsity};
use mialm::prox::{moreau_gradient, prox_l1, L1Norm};
use mialm::solvers::{initial_point, mialm_solve, MialmConfig};

fn random(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    gaussian_matrix(&mut RngStream::new(seed), rows, cols)
}

fn point(seed: u64, n: usize, r: usize) -> StiefelPoint {
    StiefelPoint::orthonormalize(&random(seed, n, r)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn qr_is_idempotent(seed in any::<u64>(), n in 2usize..12, r in 1usize..4) {
        prop_assume!(r <= n);
        let q = qr_positive(&random(seed, n, r)).unwrap();
        let qq = qr_positive(&q).unwrap();
        prop_assert!((&q - &qq).amax() < 1e-12);
        prop_assert!(stiefel_feasibility(&q) < 1e-12);
    }

    #[test]
    fn lambda_max_bounds_rayleigh_quotient(seed in any::<u64>(), n in 1usize..10) {
        let b = random(seed, n, n);
        let s = (&b + b.transpose()) * 0.5;
        let lmax = lambda_max_sym(&s, 1e-12).unwrap();
        let v = random(seed.wrapping_add(1), n, 1);
        let rq = inner(&v, &(&s * &v)) / inner(&v, &v);
        prop_assert!(rq <= lmax + 1e-9 * (1.0 + lmax.abs()));
    }

    #[test]
    fn projection_is_idempotent_and_orthogonal(seed in any::<u64>(), n in 3usize..10, r in 1usize..3) {
        let x = point(seed, n, r);
        let v = random(seed ^ 0x5a5a, n, r);
        let p = tangent_project(&x, &v).unwrap();
        let pp = tangent_project(&x, p.value()).unwrap();
        prop_assert!((p.value() - pp.value()).amax() < 1e-12);
        prop_assert!(p.tangency_residual(&x) < 1e-12);
        // the discarded part is normal: orthogonal to every tangent vector
        let w = tangent_project(&x, &random(seed ^ 0xa5a5, n, r)).unwrap();
        let normal = &v - p.value();
        prop_assert!(inner(&normal, w.value()).abs() < 1e-10 * (1.0 + v.norm() * w.norm()));
    }

    #[test]
    fn retraction_stays_on_manifold(seed in any::<u64>(), n in 3usize..10, r in 1usize..3, t in -5.0f64..5.0) {
        let x = point(seed, n, r);
        let eta = tangent_project(&x, &random(seed ^ 7, n, r)).unwrap().scaled(t);
        let y = retract_qr(&x, &eta).unwrap();
        prop_assert!(y.feasibility() < 1e-10);
    }

    #[test]
    fn prox_commutes_with_signs_and_permutations(seed in any::<u64>(), t in 0.01f64..2.0, mu in 0.0f64..2.0) {
        let v = random(seed, 6, 2);
        let p = prox_l1(&v, t, mu).unwrap();
        let neg = prox_l1(&(-&v), t, mu).unwrap();
        prop_assert!((&p + &neg).amax() < 1e-15);
        let perm = DenseMatrix::from_fn(6, 2, |i, j| v[((i + 2) % 6, 1 - j)]);
        let pperm = prox_l1(&perm, t, mu).unwrap();
        for i in 0..6 {
            for j in 0..2 {
                prop_assert_eq!(pperm[(i, j)], p[((i + 2) % 6, 1 - j)]);
            }
        }
    }

    #[test]
    fn prox_is_nonexpansive(seed in any::<u64>(), t in 0.01f64..2.0, mu in 0.0f64..2.0) {
        let a = random(seed, 5, 3);
        let b = random(seed ^ 3, 5, 3);
        let pa = prox_l1(&a, t, mu).unwrap();
        let pb = prox_l1(&b, t, mu).unwrap();
        prop_assert!((&pa - &pb).norm() <= (&a - &b).norm() + 1e-12);
    }

    #[test]
    fn moreau_gradient_is_lipschitz(seed in any::<u64>(), env in 0.05f64..2.0, w in 0.0f64..2.0) {
        let g = L1Norm::new(w).unwrap();
        let a = random(seed, 4, 3);
        let b = random(seed ^ 11, 4, 3);
        let ga = moreau_gradient(&g, env, &a).unwrap();
        let gb = moreau_gradient(&g, env, &b).unwrap();
        prop_assert!((&ga - &gb).norm() <= (&a - &b).norm() / env + 1e-10);
    }

    #[test]
    fn objective_ignores_column_signs(seed in any::<u64>(), flip in 0usize..4) {
        let p = build_cms(16, 2, 0.3).unwrap();
        let x = point(seed, 16, 2);
        let mut y = x.value().clone();
        for j in 0..2 {
            if flip & (1 << j) != 0 {
                y.column_mut(j).neg_mut();
            }
        }
        let fx = objective(&p, x.value()).unwrap();
        let fy = objective(&p, &y).unwrap();
        prop_assert!((fx - fy).abs() < 1e-12 * (1.0 + fx.abs()));
    }

    #[test]
    fn sparsity_is_a_fraction(seed in any::<u64>(), thr in 1e-6f64..3.0) {
        let s = sparsity(&random(seed, 7, 3), thr).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
    }
}

#[test]
fn schrodinger_operator_is_psd() {
    for n in [8, 33, 64] {
        let h = schrodinger_operator(n, 50.0);
        let min = h.clone().symmetric_eigen().eigenvalues.min();
        assert!(min > -1e-10, "n={n}: min eigenvalue {min}");
        assert!((&h - h.transpose()).amax() == 0.0);
    }
}

#[test]
fn solves_are_deterministic() {
    let p = build_cms(32, 2, 0.2).unwrap();
    let x0 = initial_point(32, 2, 9).unwrap();
    let a = mialm_solve(&p, &MialmConfig::default(), &x0).unwrap();
    let b = mialm_solve(&p, &MialmConfig::default(), &x0).unwrap();
    assert_eq!(a.x.value(), b.x.value());
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a.outer_iters, b.outer_iters);
}
