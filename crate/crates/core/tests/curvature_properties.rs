mod common;

use common::{admissible_point, close, corpus_entries, Poly};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerogauss::curvature::{curvature_report, mean_tilde, Causality, Signature};
use zerogauss::expr::Expr;
use zerogauss::linalg::sym_det;
use zerogauss::ScalarField;

fn point(n: usize, half: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half..half, n)
}

/// Haar-ish random rotation from the QR factorization of a Gaussian-like matrix.
fn rotation(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut q = m.qr().q();
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

fn with_constant(e: &Expr, c: f64) -> Expr {
    Expr::Add(Box::new(e.clone()), Box::new(Expr::Const(c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euclidean_curvatures_are_rotation_invariant(
        n in 2usize..=4,
        seed in any::<u64>(),
        x in point(4, 1.0),
    ) {
        let poly = Poly::random(n, 4, seed);
        let u = poly.field();
        let r = rotation(n, seed ^ 0x9e37);
        let rotated = ScalarField::analytic(
            u.expression().unwrap().affine_substitution(&rows(&r), &vec![0.0; n]),
            n,
        ).unwrap();
        let x0 = &x[..n];
        let rx: Vec<f64> = (&r * nalgebra::DVector::from_column_slice(x0)).iter().cloned().collect();
        let a = curvature_report(&rotated, x0, Signature::Euclidean).unwrap();
        let b = curvature_report(&u, &rx, Signature::Euclidean).unwrap();
        let scale = b.principal_curvatures.as_ref().unwrap().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let (ha, hb) = (a.mean_curvature.unwrap(), b.mean_curvature.unwrap());
        let (ka, kb) = (a.gauss_curvature.unwrap(), b.gauss_curvature.unwrap());
        prop_assert!(close(ha, hb, 1e-9, 1e-12 * (1.0 + scale)), "{ha} vs {hb}");
        prop_assert!(close(ka, kb, 1e-9, 1e-12 * (1.0 + scale).powi(n as i32)), "{ka} vs {kb}");
    }

    #[test]
    fn gauss_curvatures_match_the_weighted_determinant(
        n in 2usize..=4,
        seed in any::<u64>(),
        x in point(4, 1.0),
    ) {
        let u = Poly::random(n, 4, seed).field();
        let x0 = &x[..n];
        let e = curvature_report(&u, x0, Signature::Euclidean).unwrap();
        let m = curvature_report(&u, x0, Signature::Minkowski).unwrap();
        let h = DMatrix::from_row_iterator(n, n, e.hessian.iter().flatten().cloned());
        let det = sym_det(&h);
        let weighted = e.gauss_curvature.unwrap() * e.w.powf((n as f64 + 2.0) / 2.0);
        let floor = 1e-12 * (1.0 + h.norm()).powi(n as i32);
        prop_assert!(close(weighted, det, 1e-9, floor), "{weighted} vs {det}");
        prop_assert!(close(m.gauss_tilde.unwrap(), det, 1e-9, floor));
    }

    #[test]
    fn adding_a_constant_changes_only_the_value(
        idx in 0usize..16,
        raw in point(4, 150.0),
        c in -50.0f64..50.0,
        minkowski in any::<bool>(),
    ) {
        let entries = corpus_entries();
        let e = &entries[idx % entries.len()];
        if let Some(x) = admissible_point(e, &raw, 1e-3) {
            let n = e.field.dim();
            let shifted = ScalarField::analytic(with_constant(e.field.expression().unwrap(), c), n).unwrap();
            let sig = if minkowski { Signature::Minkowski } else { Signature::Euclidean };
            let mut a = curvature_report(&shifted, &x, sig).unwrap();
            let b = curvature_report(&e.field, &x, sig).unwrap();
            prop_assert!((a.value - (b.value + c)).abs() <= 1e-12 * (1.0 + b.value.abs() + c.abs()));
            a.value = b.value;
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn adding_an_affine_function_keeps_the_hessian(
        n in 2usize..=4,
        seed in any::<u64>(),
        x in point(4, 1.0),
        slope in point(4, 0.5),
    ) {
        let poly = Poly::random(n, 4, seed);
        let u = poly.field();
        let mut expr = u.expression().unwrap().clone();
        for (i, b) in slope[..n].iter().enumerate() {
            let term = Expr::Mul(Box::new(Expr::Const(*b)), Box::new(Expr::Var(i)));
            expr = Expr::Add(Box::new(expr), Box::new(term));
        }
        let v = ScalarField::analytic(expr, n).unwrap();
        let x0 = &x[..n];
        let ju = u.jet2_at(x0).unwrap();
        let jv = v.jet2_at(x0).unwrap();
        prop_assert_eq!(&ju.hessian, &jv.hessian);
        // recompute H̃ and K̃ from the old Hessian and the shifted gradient
        let p = &ju.gradient + nalgebra::DVector::from_column_slice(&slope[..n]);
        let expected_tilde = (1.0 - p.norm_squared()) * ju.hessian.trace() + p.dot(&(&ju.hessian * &p));
        let report = curvature_report(&v, x0, Signature::Minkowski).unwrap();
        let floor = 1e-13 * (1.0 + ju.hessian.norm()) * (1.0 + p.norm_squared());
        prop_assert!(close(report.mean_tilde.unwrap(), expected_tilde, 1e-12, floor));
        prop_assert!(close(mean_tilde(&jv), expected_tilde, 1e-12, floor));
        prop_assert_eq!(report.gauss_tilde.unwrap(), sym_det(&ju.hessian));
    }

    #[test]
    fn convex_fields_have_nonnegative_curvatures(
        idx in 0usize..16,
        raw in point(4, 190.0),
    ) {
        let entries = corpus_entries();
        let e = &entries[idx % entries.len()];
        prop_assume!(e.convex);
        if let Some(x) = admissible_point(e, &raw, 1e-3) {
            let eu = curvature_report(&e.field, &x, Signature::Euclidean).unwrap();
            prop_assert!(eu.principal_curvatures.unwrap().iter().all(|k| *k >= -1e-10));
            let mi = curvature_report(&e.field, &x, Signature::Minkowski).unwrap();
            if mi.causal_type == Causality::Spacelike && !mi.tilde_only {
                prop_assert!(mi.mean_curvature.unwrap() >= -1e-10);
            }
        }
    }
}
