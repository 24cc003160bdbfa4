mod common;

use common::{assembled, benchmark, iterations};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rtkrylov::preconditioners::{build, build_ilut, build_sor_variant, SorVariant};
use rtkrylov::solvers::{prepare, solve_with};
use rtkrylov::{AssemblyMode, DenseMatrix, Method, PreconditionerKind, PreconditionerSpec, SolverConfig};

fn split(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let (mut d, mut l, mut u) = (DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n));
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            match i.cmp(&j) {
                std::cmp::Ordering::Equal => d.set(i, i, v),
                std::cmp::Ordering::Greater => l.set(i, j, v),
                std::cmp::Ordering::Less => u.set(i, j, v),
            }
        }
    }
    (d, l, u)
}

fn add_scaled(a: &DenseMatrix, s: f64, b: &DenseMatrix) -> DenseMatrix {
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x + s * y).collect();
    DenseMatrix::from_row_major(a.rows(), a.cols(), data).unwrap()
}

/// P for each variant, built from A by its textbook formula.
fn reference_p(a: &DenseMatrix, kind: PreconditionerKind, omega: f64) -> DenseMatrix {
    let n = a.rows();
    let (d, l, u) = split(a);
    let zero = DenseMatrix::zeros(n, n);
    let d_over_w = add_scaled(&zero, 1.0 / omega, &d);
    match kind {
        PreconditionerKind::None => DenseMatrix::identity(n),
        PreconditionerKind::Jacobi => d,
        PreconditionerKind::Sor => add_scaled(&d_over_w, 1.0, &u),
        PreconditionerKind::Ssor => {
            let mut dinv = DenseMatrix::zeros(n, n);
            (0..n).for_each(|i| dinv.set(i, i, 1.0 / d.get(i, i)));
            let lt = add_scaled(&d_over_w, 1.0, &l);
            let ut = dinv.matmul(&add_scaled(&d_over_w, 1.0, &u)).unwrap();
            let p = lt.matmul(&ut).unwrap();
            add_scaled(&zero, omega / (2.0 - omega), &p)
        }
        PreconditionerKind::Ilut => a.clone(),
    }
}

#[test]
fn applying_p_after_p_inverse_is_identity() {
    let problem = assembled(20);
    let a = problem.matrix();
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in [PreconditionerKind::None, PreconditionerKind::Jacobi, PreconditionerKind::Sor, PreconditionerKind::Ssor] {
        for omega in [1.0, 1.5] {
            let spec = PreconditionerSpec::new(kind).with_omega(omega);
            let p = build(a, &spec).unwrap();
            let p_ref = reference_p(a, kind, omega);
            for _ in 0..5 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let back = p_ref.matvec(&p.apply(&v).unwrap()).unwrap();
                let err = back.iter().zip(&v).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err <= 1e-10, "{kind} omega={omega}: {err:e}");
            }
        }
    }
}

#[test]
fn exact_ilut_recovers_a() {
    let problem = assembled(20);
    let a = problem.matrix();
    let p = build_ilut(a, 0.0).unwrap();
    let lu = p.to_dense(a.rows());
    let err = lu.sub(a).unwrap().frobenius_norm() / a.frobenius_norm();
    assert!(err <= 1e-12, "{err:e}");
    let x: Vec<f64> = (0..a.rows()).map(|i| (i as f64).sin()).collect();
    let y = p.apply(&a.matvec(&x).unwrap()).unwrap();
    assert!(y.iter().zip(&x).all(|(u, v)| (u - v).abs() <= 1e-10));
}

#[test]
fn ilut_factor_shapes() {
    let problem = assembled(40);
    let p = build_ilut(problem.matrix(), 1e-2).unwrap();
    let (l, u) = p.ilut_factors().unwrap();
    assert!(l.unit_diagonal());
    for (i, j, _) in l.csr().triplets() {
        assert!(j < i);
    }
    for (i, j, _) in u.csr().triplets() {
        assert!(j >= i);
    }
    let n = problem.matrix().rows();
    assert!(l.csr().nnz() + u.csr().nnz() < n * n);
}

#[test]
fn exact_ilut_converges_in_two_iterations() {
    let problem = assembled(40);
    let spec = PreconditionerSpec::new(PreconditionerKind::Ilut).with_threshold(0.0);
    for method in Method::ITERATIVE {
        let r = problem.solve(&SolverConfig::new(method), &spec).unwrap();
        assert!(r.converged && r.iterations <= 2, "{method}: {}", r.iterations);
    }
}

// Holds for Gauss-Seidel at every benchmark size; at ω = 1.5 the lower
// variant is faster from N_s = 60 on.
#[test]
fn upper_gauss_seidel_beats_lower_for_richardson() {
    for ns in [20, 60, 100] {
        let problem = assembled(ns);
        let a = problem.matrix();
        let cfg = SolverConfig::new(Method::Richardson);
        let count = |variant| {
            let p = build_sor_variant(a, 1.0, variant).unwrap();
            let r = solve_with(a, problem.rhs(), &p, problem.initial_guess(), &cfg).unwrap();
            assert!(r.converged, "{variant:?}");
            r.iterations
        };
        let (upper, lower) = (count(SorVariant::Upper), count(SorVariant::Lower));
        assert!(upper <= lower, "N_s={ns}: upper {upper} lower {lower}");
    }
}

#[test]
fn matrix_free_jacobi_uses_probed_diagonal() {
    let ctx = benchmark(30, 4, 4);
    let spec = PreconditionerSpec::new(PreconditionerKind::Jacobi);
    let free = prepare(&ctx, AssemblyMode::MatrixFree).build_preconditioner(&spec).unwrap();
    let dense = prepare(&ctx, AssemblyMode::Assembled).build_preconditioner(&spec).unwrap();
    let n = ctx.dimension();
    let (pf, pd) = (free.to_dense(n), dense.to_dense(n));
    for i in 0..n {
        assert!((pf.get(i, i) - pd.get(i, i)).abs() <= 1e-13);
    }
}

#[test]
fn preconditioning_cuts_gmres_iterations() {
    let problem = assembled(40);
    let none = iterations(&problem, Method::Gmres, PreconditionerKind::None).unwrap();
    let ilut = iterations(&problem, Method::Gmres, PreconditionerKind::Ilut).unwrap();
    assert!(ilut * 4 < none, "ilut {ilut} none {none}");
}

#[test]
fn zero_diagonal_is_rejected() {
    let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
    for kind in [PreconditionerKind::Jacobi, PreconditionerKind::Sor, PreconditionerKind::Ssor, PreconditionerKind::Ilut] {
        assert!(build(&a, &PreconditionerSpec::new(kind)).is_err(), "{kind}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apply_is_linear(
        x in proptest::collection::vec(-1.0f64..1.0, 40),
        y in proptest::collection::vec(-1.0f64..1.0, 40),
        alpha in -2.0f64..2.0,
        which in 0usize..5,
    ) {
        let ctx = benchmark(20, 4, 4);
        let a = ctx.assemble_a();
        let kind = PreconditionerKind::ALL[which];
        let p = build(&a, &PreconditionerSpec::new(kind).with_omega(1.2)).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| alpha * u + v).collect();
        let (px, py, pc) = (p.apply(&x).unwrap(), p.apply(&y).unwrap(), p.apply(&combo).unwrap());
        for i in 0..40 {
            let expect = alpha * px[i] + py[i];
            prop_assert!((pc[i] - expect).abs() <= 1e-13 * (1.0 + expect.abs()));
        }
    }
}
