mod common;

use common::{context, max_abs_diff, oracle_matrix};
use proptest::prelude::*;
use rtkrylov::{FormalSolverKind, LinearOperator, SigmaVector};

#[test]
fn assembled_matches_oracle_on_small_grids() {
    for kind in [FormalSolverKind::DeloLinear, FormalSolverKind::ImplicitEuler] {
        for (ns, nm, nn) in [(3, 2, 2), (5, 4, 3), (8, 2, 5)] {
            for eps in [1e-4, 0.3] {
                let ctx = context(ns, nm, nn, eps, kind);
                let oracle = oracle_matrix(ctx.grid(), ctx.params(), kind);
                let a = ctx.assemble_a();
                let d = max_abs_diff(&a, &oracle);
                assert!(d <= 1e-12, "{kind:?} ({ns},{nm},{nn}) eps={eps}: {d:e}");
            }
        }
    }
}

#[test]
fn point_source_columns_equal_full_sweeps() {
    let ctx = context(12, 4, 4, 1e-4, FormalSolverKind::DeloLinear);
    let n = ctx.dimension();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let full = ctx.apply_a(&SigmaVector::new(e).unwrap()).unwrap();
        let fast = ctx.apply_a_point_source(j).unwrap();
        for (x, y) in full.as_slice().iter().zip(fast.as_slice()) {
            assert!((x - y).abs() <= 1e-14, "column {j}");
        }
    }
}

#[test]
fn unit_epsilon_gives_identity_and_constant_rhs() {
    let ctx = context(10, 4, 4, 1.0, FormalSolverKind::DeloLinear);
    let a = ctx.assemble_a();
    let n = ctx.dimension();
    for i in 0..n {
        for j in 0..n {
            assert_eq!(a.get(i, j), if i == j { 1.0 } else { 0.0 });
        }
    }
    let b = ctx.build_rhs();
    for k in 0..10 {
        assert_eq!((b.s00(k), b.s20(k)), (1.0, 0.0));
    }
}

#[test]
fn dimension_mismatch_is_an_error() {
    let ctx = context(4, 2, 2, 1e-4, FormalSolverKind::DeloLinear);
    assert!(ctx.apply_a(&SigmaVector::zeros(5)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn apply_is_linear(
        x in proptest::collection::vec(-1.0f64..1.0, 16),
        y in proptest::collection::vec(-1.0f64..1.0, 16),
        alpha in -3.0f64..3.0,
    ) {
        let ctx = context(8, 4, 4, 1e-2, FormalSolverKind::DeloLinear);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let ax = LinearOperator::apply(&ctx, &x);
        let ay = LinearOperator::apply(&ctx, &y);
        let ac = LinearOperator::apply(&ctx, &combo);
        for i in 0..16 {
            let expect = alpha * ax[i] + ay[i];
            prop_assert!((ac[i] - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn matrix_free_agrees_with_assembled(x in proptest::collection::vec(-1.0f64..1.0, 20)) {
        let ctx = context(10, 4, 6, 1e-4, FormalSolverKind::ImplicitEuler);
        let a = ctx.assemble_a();
        let dense = a.matvec(&x).unwrap();
        let free = LinearOperator::apply(&ctx, &x);
        let scale = dense.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for (u, v) in dense.iter().zip(&free) {
            prop_assert!((u - v).abs() <= 1e-12 * scale);
        }
    }

    // Λ is positive and J averages with positive weights, so ξJΛT maps the
    // unpolarized constant into σ⁰₀ values strictly inside (0, 1].
    #[test]
    fn scattering_of_unit_source_is_subunit(eps in 1e-4f64..0.9) {
        let ctx = context(12, 4, 4, eps, FormalSolverKind::DeloLinear);
        let one = SigmaVector::uniform(12, 1.0, 0.0);
        let a1 = ctx.apply_a(&one).unwrap();
        for k in 0..12 {
            let scattered = 1.0 - a1.s00(k);
            prop_assert!(scattered > 0.0 && scattered <= 1.0 - eps + 1e-12, "k={} {}", k, scattered);
        }
    }
}
