//! Coordinate-change tests: pullback profiles, inverse round trips, normal
//! coordinates via the shift ODE, the orthogonal-frame integrator, and the
//! isometry invariance of the classification data.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ppwave::geometry::{self, GridSpec, Point, PpWave};
use ppwave::killing;
use ppwave::normalize::*;
use ppwave::profile::ProfileFunction;
use ppwave::Domain;

fn symbolic(text: &str, n: usize, dom: Domain) -> PpWave {
    let profile = ProfileFunction::parse(text, n, &HashMap::new()).unwrap();
    PpWave::new(n, profile, dom).unwrap()
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

#[test]
fn identity_transform_is_pointwise_identity() {
    let pw = symbolic(
        "exp(2*x1)*cos(2*x2)",
        2,
        Domain::new(-0.5, 0.5, 0.5).unwrap(),
    );
    let t = BrinkmannTransform::identity(2);
    let out = apply_transform(&pw, &t).unwrap();
    for p in GridSpec::from_domain(pw.domain(), 5, 5).points(2) {
        let a = pw.profile().eval(p.u, &p.x).unwrap();
        let b = out.profile().eval(p.u, &p.x).unwrap();
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn rotation_conjugates_the_curvature() {
    let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, -1.0]);
    let profile = ProfileFunction::quadratic_constant(s.clone()).unwrap();
    let pw = PpWave::new(2, profile, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
    let a = rotation2(0.83);
    let t = BrinkmannTransform::rotation(a.clone()).unwrap();
    let out = apply_transform(&pw, &t).unwrap();

    let p = Point::on_axis(2, 0.4);
    let r_new = geometry::curvature(&out, &p).unwrap().r;
    let expected = &a * &s * a.transpose();
    assert!((r_new - &expected).amax() < 1e-12);

    // same eigenvalues, same rank
    let mut e1: Vec<f64> = s.symmetric_eigen().eigenvalues.iter().copied().collect();
    let mut e2: Vec<f64> = expected
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e1.sort_by(|x, y| x.partial_cmp(y).unwrap());
    e2.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for (x, y) in e1.iter().zip(&e2) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(geometry::curvature_rank(&out, &p, 1e-9).unwrap(), 2);
}

#[test]
fn shift_of_linear_profile_stays_flat() {
    // H = x1 is flat; a shift curve with c_ddot = -1 keeps curvature zero
    let pw = symbolic("x1", 1, Domain::new(-1.0, 1.0, 1.0).unwrap());
    let c = CurveN::from_jet_fn(-1.0, 1.0, 1, |u| CJet {
        c: DVector::from_vec(vec![-0.5 * u * u]),
        c_dot: DVector::from_vec(vec![-u]),
        c_ddot: DVector::from_vec(vec![-1.0]),
        c_dddot: DVector::from_vec(vec![0.0]),
    });
    let t = BrinkmannTransform::new(1.0, 0.0, DMatrix::identity(1, 1), c, Curve1::zero()).unwrap();
    let out = apply_transform(&pw, &t).unwrap();
    for p in GridSpec::from_domain(out.domain(), 5, 5).points(1) {
        let r = geometry::curvature(&out, &p).unwrap().r;
        assert!(r.amax() < 1e-12);
    }
}

#[test]
fn scaling_transform_rescales_the_profile() {
    // constant profile h0 with u' = a u: H' = h0 / a^2
    let profile = ProfileFunction::parse("3", 1, &HashMap::new()).unwrap();
    let pw = PpWave::new(1, profile, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
    let t = BrinkmannTransform::new(
        2.0,
        0.0,
        DMatrix::identity(1, 1),
        CurveN::zero(1),
        Curve1::zero(),
    )
    .unwrap();
    let out = apply_transform(&pw, &t).unwrap();
    let v = out.profile().eval(0.5, &DVector::zeros(1)).unwrap();
    assert!((v - 0.75).abs() < 1e-14);
    // u-domain maps to [-2, 2]
    assert_eq!((out.domain().u_min, out.domain().u_max), (-2.0, 2.0));
}

#[test]
fn inverse_round_trip_recovers_the_profile() {
    let pw = symbolic("exp(2*x1)", 1, Domain::new(-0.5, 0.5, 0.5).unwrap());
    let norm = normalize_at(&pw).unwrap();
    let inv = norm.transform.inverse();
    let back = apply_transform(&norm.pw, &inv).unwrap();
    for p in GridSpec::from_domain(pw.domain(), 7, 5).points(1) {
        let a = pw.profile().eval(p.u, &p.x).unwrap();
        let b = back.profile().eval(p.u, &p.x).unwrap();
        assert!(
            (a - b).abs() < 1e-9,
            "at u={} x={}: {a} vs {b}",
            p.u,
            p.x[0]
        );
    }
    // point map round trip
    let p = Point::new(0.37, DVector::from_vec(vec![-0.21]), 0.29);
    let q = norm.transform.map_point(&p).unwrap();
    let r = inv.map_point(&q).unwrap();
    assert!((r.xm - p.xm).abs() < 1e-9);
    assert!((r.x[0] - p.x[0]).abs() < 1e-9);
    assert!((r.u - p.u).abs() < 1e-12);
}

#[test]
fn normalize_is_identity_on_normal_profiles() {
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let profile = ProfileFunction::quadratic_constant(s).unwrap();
    let pw = PpWave::new(2, profile, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
    let norm = normalize_at(&pw).unwrap();
    for (u, j) in norm.transform.c.nodes() {
        assert!(j.c.amax() < 1e-10, "c({u}) = {:?}", j.c);
    }
    for (_, b) in norm.transform.beta.nodes() {
        assert!(b.beta.abs() < 1e-10);
    }
    assert!(norm.max_h_on_axis < 1e-12);
    assert!(norm.max_grad_on_axis < 1e-12);
}

#[test]
fn normalize_linear_profile() {
    // H = x1: c(t) solves c'' = -1, a parabola; result is flat and normal
    let pw = symbolic("x1", 1, Domain::new(-1.0, 1.0, 1.0).unwrap());
    let norm = normalize_at(&pw).unwrap();
    assert!(norm.max_h_on_axis < 1e-8);
    assert!(norm.max_grad_on_axis < 1e-8);
    let cj = norm.transform.c_jet(0.8).unwrap();
    assert!(
        (cj.c[0] + 0.5 * 0.8 * 0.8).abs() < 1e-9,
        "c(0.8) = {}",
        cj.c[0]
    );
    for p in GridSpec::from_domain(norm.pw.domain(), 5, 5).points(1) {
        assert!(geometry::curvature(&norm.pw, &p).unwrap().r.amax() < 1e-10);
    }
}

#[test]
fn normalize_preserves_killing_dimension() {
    let pw = symbolic("exp(2*x1)", 1, Domain::new(-0.5, 0.5, 0.5).unwrap());
    let norm = normalize_at(&pw).unwrap();
    let arc = Arc::new(norm.pw.clone());
    let grid = GridSpec::from_domain(arc.domain(), 9, 5).points(1);
    let alg = killing::killing_algebra(&arc, &grid, 1e-7).unwrap();
    assert_eq!(alg.dimension, 3);

    // normalizing again is the identity and leaves the dimension alone
    let again = normalize_at(&norm.pw).unwrap();
    for (_, j) in again.transform.c.nodes() {
        assert!(j.c.amax() < 1e-10);
    }
    let arc2 = Arc::new(again.pw);
    let grid2 = GridSpec::from_domain(arc2.domain(), 9, 5).points(1);
    let alg2 = killing::killing_algebra(&arc2, &grid2, 1e-7).unwrap();
    assert_eq!(alg2.dimension, 3);
}

#[test]
fn frame_ode_rotation_closed_form() {
    // M = [[0,-1],[1,0]]: A(t) = exp(-tM) = [[cos t, sin t], [-sin t, cos t]]
    let m = |_u: f64| DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let out = orthogonal_frame_ode(&m, &DMatrix::identity(2, 2), &[half_pi]).unwrap();
    let a = &out
        .iter()
        .find(|(u, _)| (*u - half_pi).abs() < 1e-12)
        .unwrap()
        .1;
    let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    assert!((a - expected).amax() < 1e-9, "{a}");

    // M = 0: constant frame
    let z = |_u: f64| DMatrix::zeros(3, 3);
    let a0 = DMatrix::identity(3, 3);
    let out = orthogonal_frame_ode(&z, &a0, &[5.0]).unwrap();
    assert!((&out.last().unwrap().1 - &a0).amax() < 1e-14);
}

#[test]
fn frame_ode_orthogonality_drift_over_long_range() {
    // piecewise-constant random skew M(u), n = 3, t up to 20
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pieces: Vec<DMatrix<f64>> = (0..20)
        .map(|_| {
            let (a, b, c) = (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            DMatrix::from_row_slice(3, 3, &[0.0, a, b, -a, 0.0, c, -b, -c, 0.0])
        })
        .collect();
    let m = move |u: f64| pieces[(u.floor().max(0.0) as usize).min(19)].clone();
    let samples: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
    let out = orthogonal_frame_ode(&m, &DMatrix::identity(3, 3), &samples).unwrap();
    for (u, a) in &out {
        let drift = (a * a.transpose() - DMatrix::identity(3, 3)).amax();
        assert!(drift < 1e-10, "drift {drift:e} at u = {u}");
    }
}

#[test]
fn frame_ode_rejects_non_skew_m() {
    let m = |_u: f64| DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    assert!(orthogonal_frame_ode(&m, &DMatrix::identity(2, 2), &[1.0]).is_err());
}

#[test]
fn isometry_invariants_under_rotation_and_scaling() {
    // rank, Ricci-flatness, plane-wave flag, and Killing dimension agree at
    // matched points before and after a transform
    let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let profile = ProfileFunction::quadratic_constant(s).unwrap();
    let pw = PpWave::new(2, profile, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
    let t =
        BrinkmannTransform::new(2.0, 0.3, rotation2(0.4), CurveN::zero(2), Curve1::zero()).unwrap();
    let out = apply_transform(&pw, &t).unwrap();

    for p in GridSpec::from_domain(pw.domain(), 3, 3).points(2) {
        let q = t.map_point(&p).unwrap();
        let r1 = geometry::curvature_rank(&pw, &p, 1e-9).unwrap();
        let r2 = geometry::curvature_rank(&out, &q, 1e-9).unwrap();
        assert_eq!(r1, r2);
        let ric1 = geometry::ricci(&pw, &p).unwrap();
        let ric2 = geometry::ricci(&out, &q).unwrap();
        // Ricci of the pullback picks up the 1/a^2 similarity factor
        assert!((ric1 / (t.a * t.a) - ric2).abs() < 1e-9);
    }
    let g1 = GridSpec::from_domain(pw.domain(), 5, 5).points(2);
    let g2 = GridSpec::from_domain(out.domain(), 5, 5).points(2);
    assert_eq!(
        geometry::is_plane_wave(&pw, &g1, 1e-9).unwrap().0,
        geometry::is_plane_wave(&out, &g2, 1e-9).unwrap().0
    );

    let a1 = killing::killing_algebra(&Arc::new(pw), &g1, 1e-7).unwrap();
    let a2 = killing::killing_algebra(&Arc::new(out), &g2, 1e-7).unwrap();
    assert_eq!(a1.dimension, a2.dimension);
}

#[test]
fn transform_json_round_trip() {
    let pw = symbolic("exp(2*x1)", 1, Domain::new(-0.5, 0.5, 0.5).unwrap());
    let norm = normalize_at(&pw).unwrap();
    let v = norm.transform.to_json();
    let back = BrinkmannTransform::from_json(&v).unwrap();
    assert_eq!(back.a, 1.0);
    for &u in &[-0.4, 0.0, 0.33] {
        let j1 = norm.transform.c_jet(u).unwrap();
        let j2 = back.c_jet(u).unwrap();
        assert!((&j1.c - &j2.c).amax() < 1e-10);
        assert!((&j1.c_dot - &j2.c_dot).amax() < 1e-10);
        let b1 = norm.transform.beta_jet(u).unwrap();
        let b2 = back.beta_jet(u).unwrap();
        assert!((b1.beta - b2.beta).abs() < 1e-10);
    }
}
