//! Closed-form homogeneous plane-wave families and symmetric plane waves.
//!
//! Each family is determined by a constant symmetric matrix `S_-` and a
//! constant skew matrix `F`:
//!
//! * type 1: `S(u) = exp(u F) S_- exp(-u F)`, defined for all `u`;
//! * type 2: `S(u) = (u + b)^{-2} exp(log(u+b) F) S_- exp(-log(u+b) F)`,
//!   defined for `u > -b`;
//! * Cahen-Wallach: constant `S`, the symmetric-space case.
//!
//! Both non-constant families solve the matrix ODE
//! `[S(u), F] + (a u + b) dS/du + 2 a S(u) = 0` with `(a, b) = (0, 1)` and
//! `(1, b)` respectively, which is what `matrix_ode_residual` verifies.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, PpWave};
use crate::profile::{ProfileFunction, SFamily};

/// Family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Type1,
    Type2,
    CahenWallach,
}

/// Defining data of a homogeneous plane wave.
#[derive(Debug, Clone)]
pub struct PlaneWaveSpec {
    pub family: Family,
    pub n: usize,
    pub s_minus: DMatrix<f64>,
    pub f: DMatrix<f64>,
    /// Singularity shift of the type-2 family (`u > -b_shift`); unused otherwise.
    pub b_shift: f64,
}

const SKEW_TOL: f64 = 1e-12;

fn check_skew(f: &DMatrix<f64>) -> Result<()> {
    let defect = (f + f.transpose()).amax();
    if defect > SKEW_TOL * f.amax().max(1.0) {
        return Err(Error::Invalid(format!(
            "F is not skew-symmetric: {defect:.3e}"
        )));
    }
    Ok(())
}

impl PlaneWaveSpec {
    pub fn new(
        family: Family,
        s_minus: DMatrix<f64>,
        f: DMatrix<f64>,
        b_shift: f64,
    ) -> Result<Self> {
        let n = s_minus.nrows();
        if s_minus.ncols() != n || f.nrows() != n || f.ncols() != n {
            return Err(Error::Invalid(
                "S_- and F must be square of equal size".into(),
            ));
        }
        if (&s_minus - s_minus.transpose()).amax() > SKEW_TOL * s_minus.amax().max(1.0) {
            return Err(Error::Invalid("S_- is not symmetric".into()));
        }
        check_skew(&f)?;
        if family == Family::CahenWallach && f.amax() != 0.0 {
            return Err(Error::Invalid("Cahen-Wallach spaces have F = 0".into()));
        }
        Ok(PlaneWaveSpec {
            family,
            n,
            s_minus: (&s_minus + s_minus.transpose()) * 0.5,
            f,
            b_shift,
        })
    }

    /// Constant-S symmetric space.
    pub fn cahen_wallach(s: DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        Self::new(Family::CahenWallach, s, DMatrix::zeros(n, n), 0.0)
    }

    /// Is `u` inside the family's domain of definition?
    pub fn in_domain(&self, u: f64) -> bool {
        match self.family {
            Family::Type2 => u > -self.b_shift,
            _ => true,
        }
    }
}

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant. For skew input the result is orthogonal to rounding.
pub fn skew_exp(f: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    check_skew(f)?;
    Ok(expm(&(f * t)))
}

/// Degree-13 Pade approximant with scaling and squaring.
pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(s);
    let mut e = pade13(&scaled);
    for _ in 0..s {
        e = &e * &e;
    }
    e
}

fn pade13(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let ident = DMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9])
        + &a6 * B[7]
        + &a4 * B[5]
        + &a2 * B[3]
        + &ident * B[1];
    let u = a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8])
        + &a6 * B[6]
        + &a4 * B[4]
        + &a2 * B[2]
        + &ident * B[0];
    let lhs = &v - &u;
    let rhs = &v + &u;
    lhs.lu()
        .solve(&rhs)
        .expect("Pade denominator is invertible")
}

/// The curvature matrix S(u) of the family.
pub fn s_of(spec: &PlaneWaveSpec, u: f64) -> Result<DMatrix<f64>> {
    if !spec.in_domain(u) {
        return Err(Error::Domain(format!(
            "u = {u} outside the family domain u > {}",
            -spec.b_shift
        )));
    }
    Ok(s_of_unchecked(spec, u))
}

fn s_of_unchecked(spec: &PlaneWaveSpec, u: f64) -> DMatrix<f64> {
    match spec.family {
        Family::CahenWallach => spec.s_minus.clone(),
        Family::Type1 => {
            let e = expm(&(&spec.f * u));
            let ei = expm(&(&spec.f * (-u)));
            &e * &spec.s_minus * &ei
        }
        Family::Type2 => {
            let tau = (u + spec.b_shift).ln();
            let e = expm(&(&spec.f * tau));
            let ei = expm(&(&spec.f * (-tau)));
            (&e * &spec.s_minus * &ei) / (u + spec.b_shift).powi(2)
        }
    }
}

/// Exact dS/du of the family (no finite differencing).
pub fn s_dot_of(spec: &PlaneWaveSpec, u: f64) -> Result<DMatrix<f64>> {
    if !spec.in_domain(u) {
        return Err(Error::Domain(format!(
            "u = {u} outside the family domain u > {}",
            -spec.b_shift
        )));
    }
    Ok(s_dot_of_unchecked(spec, u))
}

fn s_dot_of_unchecked(spec: &PlaneWaveSpec, u: f64) -> DMatrix<f64> {
    match spec.family {
        Family::CahenWallach => DMatrix::zeros(spec.n, spec.n),
        Family::Type1 => {
            // dS/du = [F, S]
            let s = s_of_unchecked(spec, u);
            &spec.f * &s - &s * &spec.f
        }
        Family::Type2 => {
            // from the defining ODE: dS/du = -( [S,F] + 2S ) / (u + b)
            let s = s_of_unchecked(spec, u);
            -((&s * &spec.f - &spec.f * &s) + &s * 2.0) / (u + spec.b_shift)
        }
    }
}

/// Build the pp-wave `2H = x^T S(u) x` on the given domain.
pub fn to_ppwave(spec: &PlaneWaveSpec, domain: Domain) -> Result<PpWave> {
    if !spec.in_domain(domain.u_min) || !spec.in_domain(domain.u_max) {
        return Err(Error::Invalid(format!(
            "domain [{}, {}] leaves the family domain u > {}",
            domain.u_min, domain.u_max, -spec.b_shift
        )));
    }
    let label = format!("{:?} family (n = {})", spec.family, spec.n);
    let s_spec = spec.clone();
    let d_spec = spec.clone();
    let family = SFamily::Closed {
        s: Arc::new(move |u| s_of_unchecked(&s_spec, u)),
        s_dot: Some(Arc::new(move |u| s_dot_of_unchecked(&d_spec, u))),
        label,
    };
    let profile = ProfileFunction::quadratic(spec.n, family)?;
    PpWave::new(spec.n, profile, domain)
}

/// Max Frobenius norm of `[S(u), F_test] + (a u + b) dS/du + 2 a S(u)` over
/// the grid: the residual of the homogeneity ODE for a candidate `(a, b, F)`.
pub fn matrix_ode_residual(
    spec: &PlaneWaveSpec,
    a: f64,
    b: f64,
    f_test: &DMatrix<f64>,
    u_grid: &[f64],
) -> Result<f64> {
    check_skew(f_test)?;
    let mut worst: f64 = 0.0;
    for &u in u_grid {
        let s = s_of(spec, u)?;
        let sd = s_dot_of(spec, u)?;
        let resid = (&s * f_test - f_test * &s) + sd * (a * u + b) + &s * (2.0 * a);
        worst = worst.max(resid.norm());
    }
    Ok(worst)
}

/// Named specs used throughout the test and verification suites.
///
/// * `rank1_example` — the rotating rank-one type-1 wave with
///   `S_- = diag(1, 0)` and 90-degree generator `F`, chosen so that
///   `S(u) = [[cos^2 u, -cos u sin u], [-cos u sin u, sin^2 u]]`;
/// * `cw_flat` — the flat Cahen-Wallach space `S = 0` (n = 2);
/// * `cw_ricci_flat_2d` — `S = diag(1, -1)`, Ricci-flat but curved.
pub fn bundled(name: &str) -> Option<PlaneWaveSpec> {
    match name {
        "rank1_example" => Some(
            PlaneWaveSpec::new(
                Family::Type1,
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]),
                0.0,
            )
            .expect("static spec"),
        ),
        "cw_flat" => Some(PlaneWaveSpec::cahen_wallach(DMatrix::zeros(2, 2)).expect("static spec")),
        "cw_ricci_flat_2d" => Some(
            PlaneWaveSpec::cahen_wallach(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]))
                .expect("static spec"),
        ),
        _ => None,
    }
}

// ----- JSON shape -----

#[derive(Serialize, Deserialize)]
struct SpecJson {
    family: Family,
    n: usize,
    #[serde(rename = "S_minus")]
    s_minus: Vec<f64>,
    #[serde(rename = "F", default)]
    f_upper: Vec<f64>,
    #[serde(default)]
    b_shift: f64,
}

impl PlaneWaveSpec {
    pub fn to_json(&self) -> serde_json::Value {
        let n = self.n;
        let mut f_upper = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                f_upper.push(self.f[(i, j)]);
            }
        }
        serde_json::to_value(SpecJson {
            family: self.family,
            n,
            s_minus: self
                .s_minus
                .row_iter()
                .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                .collect(),
            f_upper,
            b_shift: self.b_shift,
        })
        .expect("spec serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<PlaneWaveSpec> {
        let sj: SpecJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::Invalid(format!("bad plane-wave spec JSON: {e}")))?;
        let n = sj.n;
        if sj.s_minus.len() != n * n {
            return Err(Error::Invalid(
                "S_minus must be a row-major n*n array".into(),
            ));
        }
        if sj.f_upper.len() != n * (n - 1) / 2 {
            return Err(Error::Invalid(
                "F must be the strict upper triangle, length n(n-1)/2".into(),
            ));
        }
        let s_minus = DMatrix::from_row_slice(n, n, &sj.s_minus);
        let mut f = DMatrix::zeros(n, n);
        let mut it = sj.f_upper.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().unwrap();
                f[(i, j)] = v;
                f[(j, i)] = -v;
            }
        }
        PlaneWaveSpec::new(sj.family, s_minus, f, sj.b_shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::linspace;

    fn rotation_generator() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    #[test]
    fn skew_exp_is_the_rotation() {
        let f = rotation_generator();
        for &t in &[0.3, 1.0, -2.5] {
            let e = skew_exp(&f, t).unwrap();
            let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            assert!((e - expected).amax() < 1e-14, "t = {t}");
        }
        let pi = skew_exp(&f, std::f64::consts::PI).unwrap();
        assert!((pi + DMatrix::identity(2, 2)).amax() < 1e-12);
        assert_eq!(
            skew_exp(&DMatrix::zeros(3, 3), 7.0).unwrap(),
            DMatrix::identity(3, 3)
        );
    }

    #[test]
    fn skew_exp_output_is_orthogonal() {
        let f = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, -0.7, -2.0, 0.0, 1.3, 0.7, -1.3, 0.0]);
        for &t in &[0.1, 5.0, 40.0] {
            let e = skew_exp(&f, t).unwrap();
            let defect = (&e * e.transpose() - DMatrix::identity(3, 3)).amax();
            assert!(defect < 1e-12, "t = {t}: {defect:e}");
        }
    }

    #[test]
    fn rank1_example_matrix_matches_closed_form() {
        let spec = bundled("rank1_example").unwrap();
        for &u in &[0.0, 0.4, 1.9, -0.7] {
            let s = s_of(&spec, u).unwrap();
            let (c, si) = (u.cos(), u.sin());
            let expected = DMatrix::from_row_slice(2, 2, &[c * c, -c * si, -c * si, si * si]);
            assert!((s - expected).amax() < 1e-13, "u = {u}");
        }
        // exact derivative at 0: [[0, -1], [-1, 0]]
        let sd0 = s_dot_of(&spec, 0.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        assert!((sd0 - expected).amax() < 1e-13);
        // det(dS/du) is -1 for every u (conjugation-invariant)
        for &u in &[0.0, 0.3, 0.7, 2.2] {
            let det = s_dot_of(&spec, u).unwrap().determinant();
            assert!((det + 1.0).abs() < 1e-12, "u = {u}: det = {det}");
        }
    }

    #[test]
    fn cahen_wallach_is_constant() {
        let spec = bundled("cw_ricci_flat_2d").unwrap();
        let s = s_of(&spec, 17.0).unwrap();
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        assert_eq!(s_dot_of(&spec, 17.0).unwrap().amax(), 0.0);
    }

    #[test]
    fn type2_scaling() {
        let spec = PlaneWaveSpec::new(
            Family::Type2,
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            1.0,
        )
        .unwrap();
        let s = s_of(&spec, 1.0).unwrap();
        assert!((s - DMatrix::identity(2, 2) * 0.25).amax() < 1e-14);
        assert!(s_of(&spec, -1.0).is_err());
    }

    #[test]
    fn type1_with_zero_f_is_constant() {
        let spec = PlaneWaveSpec::new(
            Family::Type1,
            DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, -2.0]),
            DMatrix::zeros(2, 2),
            0.0,
        )
        .unwrap();
        assert!((s_of(&spec, 3.7).unwrap() - &spec.s_minus).amax() < 1e-14);
    }

    #[test]
    fn type1_eigenvalues_are_u_independent() {
        let spec = bundled("rank1_example").unwrap();
        let base: Vec<f64> = {
            let mut e: Vec<f64> = spec
                .s_minus
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            e
        };
        for i in 0..10 {
            let u = -2.0 + 0.43 * i as f64;
            let mut e: Vec<f64> = s_of(&spec, u)
                .unwrap()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .copied()
                .collect();
            e.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in base.iter().zip(&e) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ode_residuals() {
        let grid = linspace(-1.0, 2.0, 13);
        let spec = bundled("rank1_example").unwrap();
        let r = matrix_ode_residual(&spec, 0.0, 1.0, &spec.f, &grid).unwrap();
        assert!(r < 1e-12, "type1 residual {r:e}");

        // wrong F is far from solving the ODE: the residual is ||dS/du|| = sqrt(2)
        let bad = matrix_ode_residual(&spec, 0.0, 1.0, &DMatrix::zeros(2, 2), &grid).unwrap();
        assert!((bad - 2.0f64.sqrt()).abs() < 1e-12);

        let cw = bundled("cw_ricci_flat_2d").unwrap();
        let r = matrix_ode_residual(&cw, 0.0, 1.0, &DMatrix::zeros(2, 2), &grid).unwrap();
        assert_eq!(r, 0.0);

        let t2 = PlaneWaveSpec::new(
            Family::Type2,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -0.3]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.8, -0.8, 0.0]),
            1.0,
        )
        .unwrap();
        let grid2 = linspace(-0.5, 3.0, 13);
        let r = matrix_ode_residual(&t2, 1.0, 1.0, &t2.f, &grid2).unwrap();
        assert!(r < 1e-12, "type2 residual {r:e}");
    }

    #[test]
    fn type2_shift_translation_isometry() {
        // S_{b}(u) with u -> u + (b - b') reproduces S_{b'} on the overlap
        let s_minus = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let f = rotation_generator() * 0.6;
        let b1 = PlaneWaveSpec::new(Family::Type2, s_minus.clone(), f.clone(), 1.0).unwrap();
        let b3 = PlaneWaveSpec::new(Family::Type2, s_minus, f, 3.0).unwrap();
        for &u in &[0.2, 1.0, 2.5] {
            let lhs = s_of(&b1, u).unwrap();
            let rhs = s_of(&b3, u - 2.0).unwrap();
            assert!((lhs - rhs).amax() < 1e-13);
        }
    }

    #[test]
    fn family_waves_are_plane_waves_with_heisenberg_structure() {
        use crate::geometry::{Domain, GridSpec};
        use crate::killing;
        use std::sync::Arc;

        for name in ["rank1_example", "cw_flat", "cw_ricci_flat_2d"] {
            let spec = bundled(name).unwrap();
            let pw = Arc::new(to_ppwave(&spec, Domain::new(0.0, 1.5, 0.5).unwrap()).unwrap());
            let grid = GridSpec::from_domain(pw.domain(), 5, 5).points(2);
            let (plane, method) = crate::geometry::is_plane_wave(&pw, &grid, 1e-9).unwrap();
            assert!(plane, "{name}");
            assert_eq!(method, crate::geometry::PlaneWaveMethod::Structural);
            let h = killing::heisenberg_basis(&pw, &[]).unwrap();
            let br = killing::bracket(&h.l[0], &h.k[0]).unwrap();
            assert!(
                (br.c + 1.0).abs() < 1e-9,
                "{name}: [L_1, K_1] = {} d_-",
                br.c
            );
        }
    }

    #[test]
    fn certificate_agrees_with_common_kernel_of_s() {
        use crate::geometry::{self, Domain, GridSpec};

        // S = diag(1, 0) constant: the common kernel is e2, and the stacked
        // S-matrix route and the curvature-certificate route must agree
        let spec =
            PlaneWaveSpec::cahen_wallach(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]))
                .unwrap();
        let pw = to_ppwave(&spec, Domain::new(-1.0, 1.0, 1.0).unwrap()).unwrap();
        let grid = GridSpec::from_domain(pw.domain(), 5, 5).points(2);
        let cert = geometry::decomposability_certificate(&pw, &grid, 1e-9)
            .unwrap()
            .expect("constant rank-one S has a kernel direction");
        // direct common-kernel analysis on S(u) samples
        let mut stacked = DMatrix::zeros(2 * 5, 2);
        for (k, u) in linspace(-1.0, 1.0, 5).into_iter().enumerate() {
            stacked
                .view_mut((2 * k, 0), (2, 2))
                .copy_from(&s_of(&spec, u).unwrap());
        }
        let direct = stacked.svd(false, true);
        let v_t = direct.v_t.unwrap();
        let min_idx = direct
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let v = v_t.row(min_idx).transpose();
        let align = cert.dot(&v).abs();
        assert!(
            (align - 1.0).abs() < 1e-10,
            "routes disagree: {cert:?} vs {v:?}"
        );
        assert!((cert[1].abs() - 1.0).abs() < 1e-10 && cert[0].abs() < 1e-10);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = bundled("rank1_example").unwrap();
        let v = spec.to_json();
        let back = PlaneWaveSpec::from_json(&v).unwrap();
        assert_eq!(back.family, Family::Type1);
        assert!((back.s_minus - spec.s_minus).amax() == 0.0);
        assert!((back.f - spec.f).amax() == 0.0);
    }
}
