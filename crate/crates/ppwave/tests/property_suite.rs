//! Property tests: symbolic derivatives against central finite differences
//! of the next-lower derivative level, structural symmetries, and rank
//! invariance under orthogonal frame changes.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use ppwave::expr::{Expr, Var};
use ppwave::geometry::{self, Point, PpWave};
use ppwave::normalize::{apply_transform, BrinkmannTransform};
use ppwave::profile::ProfileFunction;
use ppwave::Domain;

const FD_STEP: f64 = 1e-4;
const FD_REL_TOL: f64 = 1e-6;

/// Linear form c0 + c1 x1 + c2 x2 + cu u with bounded coefficients: safe to
/// exponentiate and compose on the unit ball.
fn linear_form() -> impl Strategy<Value = Expr> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(c0, c1, c2, cu)| {
        let mut e = Expr::Num(c0);
        e = Expr::Add(
            Box::new(e),
            Box::new(Expr::Mul(Box::new(Expr::Num(c1)), Box::new(Expr::X(1)))),
        );
        e = Expr::Add(
            Box::new(e),
            Box::new(Expr::Mul(Box::new(Expr::Num(c2)), Box::new(Expr::X(2)))),
        );
        Expr::Add(
            Box::new(e),
            Box::new(Expr::Mul(Box::new(Expr::Num(cu)), Box::new(Expr::U))),
        )
    })
}

fn safe_expr() -> impl Strategy<Value = Expr> {
    let atom = prop_oneof![
        linear_form(),
        linear_form().prop_map(|l| Expr::Fun(ppwave::expr::Func::Sin, Box::new(l))),
        linear_form().prop_map(|l| Expr::Fun(ppwave::expr::Func::Cos, Box::new(l))),
        linear_form().prop_map(|l| Expr::Fun(ppwave::expr::Func::Exp, Box::new(l))),
        linear_form().prop_map(|l| Expr::Fun(ppwave::expr::Func::Cosh, Box::new(l))),
    ];
    // sums and products of two atoms keep evaluation bounded on the ball
    (atom.clone(), atom.clone(), prop::bool::ANY).prop_map(|(a, b, mul)| {
        if mul {
            Expr::Mul(Box::new(a), Box::new(b))
        } else {
            Expr::Add(Box::new(a), Box::new(b))
        }
    })
}

fn sample_points() -> Vec<(f64, DVector<f64>)> {
    vec![
        (0.0, DVector::from_vec(vec![0.0, 0.0])),
        (0.3, DVector::from_vec(vec![0.2, -0.4])),
        (-0.5, DVector::from_vec(vec![-0.3, 0.1])),
        (0.7, DVector::from_vec(vec![0.5, 0.5])),
    ]
}

/// Central finite difference of `p` in the given variable.
fn fd(p: &ProfileFunction, var: Var, u: f64, x: &DVector<f64>) -> f64 {
    match var {
        Var::U => {
            let hi = p.eval(u + FD_STEP, x).unwrap();
            let lo = p.eval(u - FD_STEP, x).unwrap();
            (hi - lo) / (2.0 * FD_STEP)
        }
        Var::X(i) => {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i - 1] += FD_STEP;
            xm[i - 1] -= FD_STEP;
            (p.eval(u, &xp).unwrap() - p.eval(u, &xm).unwrap()) / (2.0 * FD_STEP)
        }
    }
}

fn assert_close(exact: f64, approx: f64, what: &str) {
    let denom = exact.abs().max(1.0);
    let rel = (exact - approx).abs() / denom;
    assert!(
        rel <= FD_REL_TOL,
        "{what}: exact {exact} vs fd {approx} (rel {rel:e})"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// First, second, and third symbolic derivatives each agree with a
    /// central difference of the previous (exactly differentiated) level.
    #[test]
    fn derivatives_match_finite_differences(expr in safe_expr()) {
        let p = ProfileFunction::from_expr(expr, 2).unwrap();
        for (u, x) in sample_points() {
            for i in 1..=2usize {
                let d1 = p.derive(&[Var::X(i)]).unwrap();
                assert_close(d1.eval(u, &x).unwrap(), fd(&p, Var::X(i), u, &x), "level 1");
                for j in 1..=2usize {
                    let d2 = d1.derive(&[Var::X(j)]).unwrap();
                    assert_close(d2.eval(u, &x).unwrap(), fd(&d1, Var::X(j), u, &x), "level 2");
                    for k in 1..=2usize {
                        let d3 = d2.derive(&[Var::X(k)]).unwrap();
                        assert_close(d3.eval(u, &x).unwrap(), fd(&d2, Var::X(k), u, &x), "level 3");
                    }
                }
            }
            let du = p.derive(&[Var::U]).unwrap();
            assert_close(du.eval(u, &x).unwrap(), fd(&p, Var::U, u, &x), "u level");
        }
    }

    /// Mixed partials commute at evaluation level.
    #[test]
    fn mixed_partials_commute(expr in safe_expr()) {
        let p = ProfileFunction::from_expr(expr, 2).unwrap();
        for (u, x) in sample_points() {
            let d12 = p.derive(&[Var::X(1), Var::X(2)]).unwrap().eval(u, &x).unwrap();
            let d21 = p.derive(&[Var::X(2), Var::X(1)]).unwrap().eval(u, &x).unwrap();
            prop_assert!((d12 - d21).abs() <= 1e-12 * d12.abs().max(1.0));
            let du1 = p.derive(&[Var::U, Var::X(1)]).unwrap().eval(u, &x).unwrap();
            let d1u = p.derive(&[Var::X(1), Var::U]).unwrap().eval(u, &x).unwrap();
            prop_assert!((du1 - d1u).abs() <= 1e-12 * du1.abs().max(1.0));
        }
    }

    /// The curvature matrix is the transverse Hessian: cross-check against
    /// finite differences of the gradient, and confirm exact symmetry.
    #[test]
    fn curvature_is_the_hessian(expr in safe_expr()) {
        let p = ProfileFunction::from_expr(expr, 2).unwrap();
        let pw = PpWave::new(2, p, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
        for (u, x) in sample_points() {
            let pt = Point::new(0.0, x.clone(), u);
            let r = geometry::curvature(&pw, &pt).unwrap().r;
            prop_assert!((r[(0, 1)] - r[(1, 0)]).abs() == 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    let di = pw.profile().derive(&[Var::X(i + 1)]).unwrap();
                    let fd_ij = fd(&di, Var::X(j + 1), u, &x);
                    let denom = r[(i, j)].abs().max(1.0);
                    prop_assert!((r[(i, j)] - fd_ij).abs() / denom <= FD_REL_TOL);
                }
            }
        }
    }

    /// Curvature rank is invariant under an orthogonal change of the
    /// transverse frame.
    #[test]
    fn rank_invariant_under_orthogonal_frames(theta in 0.0f64..std::f64::consts::TAU, which in 0usize..3) {
        let s = match which {
            0 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            1 => DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            _ => DMatrix::zeros(2, 2),
        };
        let profile = ProfileFunction::quadratic_constant(s).unwrap();
        let pw = PpWave::new(2, profile, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
        let q = DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()]);
        let t = BrinkmannTransform::rotation(q).unwrap();
        let out = apply_transform(&pw, &t).unwrap();
        let p0 = Point::on_axis(2, 0.3);
        prop_assert_eq!(
            geometry::curvature_rank(&pw, &p0, 1e-9).unwrap(),
            geometry::curvature_rank(&out, &p0, 1e-9).unwrap()
        );
    }
}
