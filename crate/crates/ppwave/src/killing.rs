//! Killing vector fields of a pp-wave in normal Brinkmann coordinates.
//!
//! A Killing field is the data `(a, b, c, F, Psi)`:
//!
//! ```text
//! K = (c - a x^- - Psi_dot^T x) d_-  +  (Psi + F x)^i d_i  +  (a u + b) d_+
//! ```
//!
//! with constant `a, b, c`, constant skew `F`, and `Psi(u)` solving the
//! on-axis second-order system `Psi'' = Hess H(u, 0) Psi`. The full Killing
//! equation
//!
//! ```text
//! Psi''^T x - grad H^T (Psi + F x) - (a u + b) dH/du - 2 a H = 0
//! ```
//!
//! is linear and homogeneous in the parameter vector
//! `theta = (a, b, F, Psi(0), Psi'(0))`, so the whole algebra is the
//! numerical kernel of a residual matrix sampled over a grid, plus the
//! always-present field `d_-` (parameter `c`).
//!
//! Bracket orientation: the toolkit fixes the Lie bracket so that the
//! Heisenberg pairs of a plane wave satisfy `[L_i, K_j] = -delta_ij d_-`
//! (the opposite orientation flips every structure constant and nothing
//! else; all maps below use the same convention consistently).

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{is_plane_wave, GridSpec, Point, PpWave};
use crate::ode::{self, linspace, Trajectory};

/// Tolerance below which the constancy of a bracket's `c` parameter and the
/// closure of its trajectory are enforced.
const BRACKET_C_TOL: f64 = 1e-8;
const BRACKET_CLOSURE_TOL: f64 = 1e-7;
const NORMAL_FORM_TOL: f64 = 1e-8;

/// psi, psi', psi'' at one u.
#[derive(Debug, Clone)]
pub struct PsiJet {
    pub psi: DVector<f64>,
    pub psi_dot: DVector<f64>,
    pub psi_ddot: DVector<f64>,
}

type PsiClosure = Arc<dyn Fn(f64) -> Result<PsiJet> + Send + Sync>;

#[derive(Clone)]
enum PsiSource {
    /// Integrated against the on-axis Hessian of the owning metric.
    Integrated(Trajectory),
    /// Supplied in closed form (raw-coordinate fields, bracket results).
    Closed(PsiClosure),
}

impl std::fmt::Debug for PsiSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiSource::Integrated(t) => {
                write!(f, "Integrated[{}, {}]", t.u_min(), t.u_max())
            }
            PsiSource::Closed(_) => write!(f, "Closed"),
        }
    }
}

/// A Killing vector field bound to its metric.
#[derive(Debug, Clone)]
pub struct KillingField {
    pw: Arc<PpWave>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    f_upper: Vec<f64>,
    psi: PsiSource,
}

pub fn skew_from_upper(n: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(n, n);
    let mut it = upper.iter();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = *it.next().expect("upper triangle length");
            f[(i, j)] = v;
            f[(j, i)] = -v;
        }
    }
    f
}

pub fn upper_from_skew(f: &DMatrix<f64>) -> Vec<f64> {
    let n = f.nrows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(f[(i, j)]);
        }
    }
    out
}

impl KillingField {
    /// Integrate the on-axis system from initial data `Psi(0)`, `Psi'(0)`;
    /// nodes are forced at the metric's standard mesh plus `extra_us`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_initial_data(
        pw: Arc<PpWave>,
        a: f64,
        b: f64,
        c: f64,
        f_upper: Vec<f64>,
        psi0: DVector<f64>,
        dpsi0: DVector<f64>,
        extra_us: &[f64],
    ) -> Result<KillingField> {
        let n = pw.n();
        if psi0.len() != n || dpsi0.len() != n || f_upper.len() != n * (n - 1) / 2 {
            return Err(Error::Incompatible(
                "Killing parameter sizes do not match n".into(),
            ));
        }
        let traj = integrate_psi(&pw, &psi0, &dpsi0, extra_us)?;
        Ok(KillingField {
            pw,
            a,
            b,
            c,
            f_upper,
            psi: PsiSource::Integrated(traj),
        })
    }

    /// Field with a closed-form trajectory (used for raw-coordinate fields
    /// displayed in the literature and for bracket results).
    pub fn from_psi_closure(
        pw: Arc<PpWave>,
        a: f64,
        b: f64,
        c: f64,
        f_upper: Vec<f64>,
        psi: PsiClosure,
    ) -> KillingField {
        KillingField {
            pw,
            a,
            b,
            c,
            f_upper,
            psi: PsiSource::Closed(psi),
        }
    }

    /// The parallel field `d_-` (parameters all zero except `c = 1`).
    pub fn d_minus(pw: Arc<PpWave>) -> KillingField {
        let n = pw.n();
        let zero = move |_u: f64| {
            Ok(PsiJet {
                psi: DVector::zeros(n),
                psi_dot: DVector::zeros(n),
                psi_ddot: DVector::zeros(n),
            })
        };
        let m = n * (n - 1) / 2;
        KillingField {
            pw,
            a: 0.0,
            b: 0.0,
            c: 1.0,
            f_upper: vec![0.0; m],
            psi: PsiSource::Closed(Arc::new(zero)),
        }
    }

    pub fn metric(&self) -> &Arc<PpWave> {
        &self.pw
    }

    pub fn n(&self) -> usize {
        self.pw.n()
    }

    pub fn f_matrix(&self) -> DMatrix<f64> {
        skew_from_upper(self.n(), &self.f_upper)
    }

    pub fn f_upper(&self) -> &[f64] {
        &self.f_upper
    }

    pub fn psi_jet(&self, u: f64) -> Result<PsiJet> {
        match &self.psi {
            PsiSource::Integrated(traj) => {
                let n = self.n();
                let y = traj.eval(u)?;
                let psi = y.rows(0, n).into_owned();
                let psi_dot = y.rows(n, n).into_owned();
                let psi_ddot = self.pw.hess_on_axis(u)? * &psi;
                Ok(PsiJet {
                    psi,
                    psi_dot,
                    psi_ddot,
                })
            }
            PsiSource::Closed(f) => f(u),
        }
    }

    /// Coordinate components of the field at a point.
    pub fn components_at(&self, p: &Point) -> Result<(f64, DVector<f64>, f64)> {
        let jet = self.psi_jet(p.u)?;
        let minus = self.c - self.a * p.xm - jet.psi_dot.dot(&p.x);
        let trans = &jet.psi + self.f_matrix() * &p.x;
        let plus = self.a * p.u + self.b;
        Ok((minus, trans, plus))
    }

    /// Parameter coordinates `(a, b, c, F_upper, Psi(0), Psi'(0))`.
    pub fn param_vector(&self) -> Result<DVector<f64>> {
        let jet = self.psi_jet(0.0)?;
        let mut v = vec![self.a, self.b, self.c];
        v.extend_from_slice(&self.f_upper);
        v.extend(jet.psi.iter());
        v.extend(jet.psi_dot.iter());
        Ok(DVector::from_vec(v))
    }

    /// Serialize; the trajectory is reconstructed on load by re-integration.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let jet = self.psi_jet(0.0)?;
        let (lo, hi) = match &self.psi {
            PsiSource::Integrated(t) => (t.u_min(), t.u_max()),
            PsiSource::Closed(_) => (self.pw.domain().u_min, self.pw.domain().u_max),
        };
        Ok(serde_json::json!({
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "F": self.f_upper,
            "psi0": jet.psi.iter().copied().collect::<Vec<f64>>(),
            "dpsi0": jet.psi_dot.iter().copied().collect::<Vec<f64>>(),
            "u_range": [lo, hi],
        }))
    }

    pub fn from_json(pw: Arc<PpWave>, v: &serde_json::Value) -> Result<KillingField> {
        let get = |k: &str| -> Result<&serde_json::Value> {
            v.get(k)
                .ok_or_else(|| Error::Invalid(format!("Killing field JSON missing `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .as_f64()
                .ok_or_else(|| Error::Invalid(format!("`{k}` must be a number")))
        };
        let arr = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .as_array()
                .ok_or_else(|| Error::Invalid(format!("`{k}` must be an array")))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Invalid(format!("`{k}` must be numbers")))
                })
                .collect()
        };
        let range = arr("u_range")?;
        let extra = if range.len() == 2 {
            vec![range[0], range[1]]
        } else {
            vec![]
        };
        KillingField::from_initial_data(
            pw,
            num("a")?,
            num("b")?,
            num("c")?,
            arr("F")?,
            DVector::from_vec(arr("psi0")?),
            DVector::from_vec(arr("dpsi0")?),
            &extra,
        )
    }
}

/// Standard integration mesh for a metric: its u-domain at spacing <= 0.02,
/// plus 0 and any extra required points.
fn standard_mesh(pw: &PpWave, extra: &[f64]) -> Vec<f64> {
    let d = pw.domain();
    let count = (((d.u_max - d.u_min) / 0.02).ceil() as usize).clamp(2, 80_000) + 1;
    let mut mesh = linspace(d.u_min, d.u_max, count);
    mesh.extend_from_slice(extra);
    mesh.push(0.0);
    mesh.sort_by(|a, b| a.partial_cmp(b).unwrap());
    mesh.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    mesh
}

/// Solve `Psi'' = Hess H(u, 0) Psi` with the given initial data.
pub fn integrate_psi(
    pw: &PpWave,
    psi0: &DVector<f64>,
    dpsi0: &DVector<f64>,
    extra_us: &[f64],
) -> Result<Trajectory> {
    let n = pw.n();
    let rhs = |u: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let s0 = pw.hess_on_axis(u)?;
        let psi = y.rows(0, n).into_owned();
        let psi_dot = y.rows(n, n);
        let mut dy = DVector::zeros(2 * n);
        dy.rows_mut(0, n).copy_from(&psi_dot);
        dy.rows_mut(n, n).copy_from(&(s0 * psi));
        Ok(dy)
    };
    let mut y0 = DVector::zeros(2 * n);
    y0.rows_mut(0, n).copy_from(psi0);
    y0.rows_mut(n, n).copy_from(dpsi0);
    ode::integrate(
        rhs,
        y0,
        &standard_mesh(pw, extra_us),
        ode::DEFAULT_TOL,
        ode::DEFAULT_H_MAX,
    )
}

/// Largest deviation of `(H, grad H)` from zero along the axis.
pub fn normal_form_deviation(pw: &PpWave, us: &[f64]) -> Result<(f64, f64)> {
    let origin = DVector::zeros(pw.n());
    let mut max_h: f64 = 0.0;
    let mut max_grad: f64 = 0.0;
    for &u in us {
        max_h = max_h.max(pw.profile().eval(u, &origin)?.abs());
        max_grad = max_grad.max(pw.profile().grad(u, &origin)?.amax());
    }
    Ok((max_h, max_grad))
}

/// True iff `H(u, 0)` and `grad H(u, 0)` vanish below `tol` on the samples.
pub fn require_normal_form(pw: &PpWave, us: &[f64], tol: f64) -> Result<bool> {
    let (max_h, max_grad) = normal_form_deviation(pw, us)?;
    Ok(max_h < tol && max_grad < tol)
}

/// Max absolute residual of the full Killing equation over the grid.
pub fn killing_residual(k: &KillingField, grid: &[Point]) -> Result<f64> {
    let f = k.f_matrix();
    let mut worst: f64 = 0.0;
    for p in grid {
        let jet = k.psi_jet(p.u)?;
        let h = k.pw.profile().eval(p.u, &p.x)?;
        let h_dot = k.pw.profile().h_dot(p.u, &p.x)?;
        let g = k.pw.profile().grad(p.u, &p.x)?;
        let r = jet.psi_ddot.dot(&p.x)
            - g.dot(&(&jet.psi + &f * &p.x))
            - (k.a * p.u + k.b) * h_dot
            - 2.0 * k.a * h;
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Upper bound for the algebra dimension: `(2n + 3) + n(n-1)/2`.
pub fn dim_bound(n: usize) -> usize {
    2 * n + 3 + n * (n - 1) / 2
}

/// The assembled Killing algebra with its numerical-rank audit trail.
#[derive(Debug, Clone)]
pub struct KillingAlgebra {
    /// `d_-` first, then one field per kernel vector.
    pub basis: Vec<KillingField>,
    pub dimension: usize,
    pub nullity: usize,
    /// All singular values of the residual matrix, descending.
    pub singular_values: Vec<f64>,
    /// Ratio (smallest kept singular value) / (largest dropped); the computed
    /// dimension is only trustworthy when this is large (>= 1e3).
    pub gap: f64,
    pub threshold: f64,
}

/// Assemble the Killing algebra of a normal-form pp-wave over a grid.
pub fn killing_algebra(pw: &Arc<PpWave>, grid: &[Point], tol: f64) -> Result<KillingAlgebra> {
    let n = pw.n();
    let m = n * (n - 1) / 2;
    let d = 2 + m + 2 * n;

    let mut us: Vec<f64> = grid.iter().map(|p| p.u).collect();
    us.sort_by(|a, b| a.partial_cmp(b).unwrap());
    us.dedup_by(|a, b| (*a - *b).abs() < 1e-13);

    let (max_h, max_grad) = normal_form_deviation(pw, &us)?;
    if max_h > NORMAL_FORM_TOL || max_grad > NORMAL_FORM_TOL {
        return Err(Error::NotNormalForm { max_h, max_grad });
    }

    // Fundamental system: Psi_k with Psi(0) = e_k, then Psi'(0) = e_k.
    let mut fundamentals: Vec<Trajectory> = Vec::with_capacity(2 * n);
    for k in 0..2 * n {
        let mut psi0 = DVector::zeros(n);
        let mut dpsi0 = DVector::zeros(n);
        if k < n {
            psi0[k] = 1.0;
        } else {
            dpsi0[k - n] = 1.0;
        }
        fundamentals.push(integrate_psi(pw, &psi0, &dpsi0, &us)?);
    }

    let off_axis: Vec<&Point> = grid.iter().filter(|p| p.x.norm() > 0.0).collect();
    if off_axis.len() < d + 1 {
        return Err(Error::GridTooSmall {
            rows: off_axis.len(),
            unknowns: d,
        });
    }

    let mut mat = DMatrix::zeros(off_axis.len(), d);
    for (row, p) in off_axis.iter().enumerate() {
        let h = pw.profile().eval(p.u, &p.x)?;
        let h_dot = pw.profile().h_dot(p.u, &p.x)?;
        let g = pw.profile().grad(p.u, &p.x)?;
        let s0 = pw.hess_on_axis(p.u)?;
        mat[(row, 0)] = -p.u * h_dot - 2.0 * h;
        mat[(row, 1)] = -h_dot;
        let mut col = 2;
        for i in 0..n {
            for j in (i + 1)..n {
                mat[(row, col)] = -(g[i] * p.x[j] - g[j] * p.x[i]);
                col += 1;
            }
        }
        for (k, traj) in fundamentals.iter().enumerate() {
            let y = traj.eval(p.u)?;
            let psi = y.rows(0, n).into_owned();
            mat[(row, col + k)] = (&s0 * &psi).dot(&p.x) - g.dot(&psi);
        }
    }

    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("svd with v");
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, v_t.row(i).transpose()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let sigma_max = pairs.first().map(|p| p.0).unwrap_or(0.0);
    let threshold = tol * sigma_max;
    let kept: Vec<f64> = pairs
        .iter()
        .map(|p| p.0)
        .filter(|s| *s > threshold)
        .collect();
    let kernel: Vec<&(f64, DVector<f64>)> = pairs.iter().filter(|p| p.0 <= threshold).collect();
    let gap = match (kept.last(), kernel.first()) {
        (Some(min_kept), Some((max_dropped, _))) if *max_dropped > 0.0 => min_kept / max_dropped,
        _ => f64::INFINITY,
    };

    let mut basis = vec![KillingField::d_minus(pw.clone())];
    for (_, v) in &kernel {
        let mut v = (*v).clone();
        // deterministic sign: largest-magnitude entry positive
        let lead = v
            .iter()
            .cloned()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            v = -v;
        }
        let a = v[0];
        let b = v[1];
        let f_upper: Vec<f64> = (0..m).map(|i| v[2 + i]).collect();
        let psi0 = DVector::from_iterator(n, (0..n).map(|i| v[2 + m + i]));
        let dpsi0 = DVector::from_iterator(n, (0..n).map(|i| v[2 + m + n + i]));
        basis.push(KillingField::from_initial_data(
            pw.clone(),
            a,
            b,
            0.0,
            f_upper,
            psi0,
            dpsi0,
            &us,
        )?);
    }

    let nullity = kernel.len();
    Ok(KillingAlgebra {
        basis,
        dimension: nullity + 1,
        nullity,
        singular_values: pairs.iter().map(|p| p.0).collect(),
        gap,
        threshold,
    })
}

/// Lie bracket of two Killing fields over the same metric.
///
/// The `c` parameter of the result is the constant value of
/// `Psi_1^T Psi_2' - Psi_1'^T Psi_2 - a_1 c_2 + a_2 c_1`; its constancy along
/// u and the closure of the result's trajectory under the on-axis system are
/// verified and reported as errors when violated.
pub fn bracket(k1: &KillingField, k2: &KillingField) -> Result<KillingField> {
    if !Arc::ptr_eq(&k1.pw, &k2.pw) {
        return Err(Error::Incompatible(
            "bracket of fields over different metrics".into(),
        ));
    }
    let pw = k1.pw.clone();
    let n = pw.n();
    let f1 = k1.f_matrix();
    let f2 = k2.f_matrix();
    let (a1, b1, c1) = (k1.a, k1.b, k1.c);
    let (a2, b2, c2) = (k2.a, k2.b, k2.c);

    let b_hat = a1 * b2 - a2 * b1;
    let f_hat = &f1 * &f2 - &f2 * &f1;

    let j1_0 = k1.psi_jet(0.0)?;
    let j2_0 = k2.psi_jet(0.0)?;
    let c_of = |j1: &PsiJet, j2: &PsiJet| -> f64 {
        j1.psi.dot(&j2.psi_dot) - j1.psi_dot.dot(&j2.psi) - a1 * c2 + a2 * c1
    };
    let c_hat = c_of(&j1_0, &j2_0);

    // constancy audit over a comparison mesh
    let dom = pw.domain();
    let mesh = linspace(dom.u_min, dom.u_max, 41);
    let mut c_drift: f64 = 0.0;
    for &u in &mesh {
        let j1 = k1.psi_jet(u)?;
        let j2 = k2.psi_jet(u)?;
        c_drift = c_drift.max((c_of(&j1, &j2) - c_hat).abs());
    }
    if c_drift > BRACKET_C_TOL {
        return Err(Error::BracketConsistency {
            what: "bracket c-parameter drift along u".into(),
            magnitude: c_drift,
        });
    }

    let k1c = k1.clone();
    let k2c = k2.clone();
    let pwc = pw.clone();
    let f1c = f1.clone();
    let f2c = f2.clone();
    let psi_hat = move |u: f64| -> Result<PsiJet> {
        let j1 = k1c.psi_jet(u)?;
        let j2 = k2c.psi_jet(u)?;
        let psi = &f1c * &j2.psi - &f2c * &j1.psi + &j1.psi_dot * (a2 * u + b2)
            - &j2.psi_dot * (a1 * u + b1);
        let psi_dot = &f1c * &j2.psi_dot - &f2c * &j1.psi_dot
            + &j1.psi_dot * a2
            + &j1.psi_ddot * (a2 * u + b2)
            - &j2.psi_dot * a1
            - &j2.psi_ddot * (a1 * u + b1);
        let psi_ddot = pwc.hess_on_axis(u)? * &psi;
        Ok(PsiJet {
            psi,
            psi_dot,
            psi_ddot,
        })
    };

    // closure audit: the pointwise formula must solve the on-axis system
    let start = psi_hat(0.0)?;
    let reint = integrate_psi(&pw, &start.psi, &start.psi_dot, &mesh)?;
    let mut closure_defect: f64 = 0.0;
    for &u in &mesh {
        let formula = psi_hat(u)?;
        let y = reint.eval(u)?;
        for i in 0..n {
            closure_defect = closure_defect.max((formula.psi[i] - y[i]).abs());
            closure_defect = closure_defect.max((formula.psi_dot[i] - y[n + i]).abs());
        }
    }
    if closure_defect > BRACKET_CLOSURE_TOL {
        return Err(Error::BracketConsistency {
            what: "bracket trajectory does not solve the on-axis system".into(),
            magnitude: closure_defect,
        });
    }

    Ok(KillingField {
        pw,
        a: 0.0,
        b: b_hat,
        c: c_hat,
        f_upper: upper_from_skew(&f_hat),
        psi: PsiSource::Closed(Arc::new(psi_hat)),
    })
}

/// The Heisenberg fields of a plane wave: `l[i]` from `Psi(0) = 0`,
/// `Psi'(0) = e_i`; `k[i]` from `Psi(0) = e_i`, `Psi'(0) = 0`.
pub struct HeisenbergBasis {
    pub l: Vec<KillingField>,
    pub k: Vec<KillingField>,
}

pub fn heisenberg_basis(pw: &Arc<PpWave>, extra_us: &[f64]) -> Result<HeisenbergBasis> {
    let n = pw.n();
    let grid = GridSpec::from_domain(pw.domain(), 5, 5).points(n);
    let (plane, _) = is_plane_wave(pw, &grid, 1e-9)?;
    if !plane {
        return Err(Error::NotPlaneWave(
            "the Heisenberg construction needs H quadratic in x".into(),
        ));
    }
    let m = n * (n - 1) / 2;
    let mut l = Vec::with_capacity(n);
    let mut k = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        l.push(KillingField::from_initial_data(
            pw.clone(),
            0.0,
            0.0,
            0.0,
            vec![0.0; m],
            DVector::zeros(n),
            e.clone(),
            extra_us,
        )?);
        k.push(KillingField::from_initial_data(
            pw.clone(),
            0.0,
            0.0,
            0.0,
            vec![0.0; m],
            e,
            DVector::zeros(n),
            extra_us,
        )?);
    }
    Ok(HeisenbergBasis { l, k })
}

/// Image of a Killing field under the evaluation map at the origin:
/// an element of sim(n) plus a translation of R^{1,n+1}.
#[derive(Debug, Clone)]
pub struct SimElement {
    pub a: f64,
    pub f: DMatrix<f64>,
    pub y: DVector<f64>,
    pub c: f64,
    pub x: DVector<f64>,
    pub b: f64,
}

impl SimElement {
    /// The (n+2)x(n+2) matrix in the null basis (E_-, E_i, E_+):
    /// `[[a, Y^T, 0], [0, -F, -Y], [0, 0, -a]]`.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.y.len();
        let mut mtx = DMatrix::zeros(n + 2, n + 2);
        mtx[(0, 0)] = self.a;
        for i in 0..n {
            mtx[(0, 1 + i)] = self.y[i];
            mtx[(1 + i, n + 1)] = -self.y[i];
            for j in 0..n {
                mtx[(1 + i, 1 + j)] = -self.f[(i, j)];
            }
        }
        mtx[(n + 1, n + 1)] = -self.a;
        mtx
    }

    /// The translation component `(-c, -X, -b)`.
    pub fn translation(&self) -> DVector<f64> {
        let n = self.x.len();
        let mut t = DVector::zeros(n + 2);
        t[0] = -self.c;
        for i in 0..n {
            t[1 + i] = -self.x[i];
        }
        t[n + 1] = -self.b;
        t
    }
}

/// Evaluation map at the origin: `X = Psi(0)`, `Y = Psi'(0)`, the rest copied.
pub fn kappa(k: &KillingField) -> Result<SimElement> {
    let jet = k.psi_jet(0.0)?;
    Ok(SimElement {
        a: k.a,
        f: k.f_matrix(),
        y: jet.psi_dot,
        c: k.c,
        x: jet.psi,
        b: k.b,
    })
}

/// Bracket in sim(n) x R^{1,n+1}, oriented to match the field bracket.
pub fn sim_bracket(e1: &SimElement, e2: &SimElement) -> (DMatrix<f64>, DVector<f64>) {
    let m1 = e1.matrix();
    let m2 = e2.matrix();
    let t1 = e1.translation();
    let t2 = e2.translation();
    (&m2 * &m1 - &m1 * &m2, m2 * t1 - m1 * t2)
}

/// The failure of the evaluation map to be a homomorphism, together with its
/// curvature closed form `Y-row = b_1 S X_2 - b_2 S X_1`, `S = Hess H(0,0)`.
#[derive(Debug, Clone)]
pub struct KappaDefect {
    pub matrix: DMatrix<f64>,
    pub translation: DVector<f64>,
    pub closed_form: DMatrix<f64>,
    /// max |computed defect - closed form| over all entries
    pub mismatch: f64,
}

pub fn kappa_defect(k1: &KillingField, k2: &KillingField) -> Result<KappaDefect> {
    let pw = &k1.pw;
    let n = pw.n();
    let e1 = kappa(k1)?;
    let e2 = kappa(k2)?;
    let (bm, bt) = sim_bracket(&e1, &e2);
    let kb = kappa(&bracket(k1, k2)?)?;
    let matrix = bm - kb.matrix();
    let translation = bt - kb.translation();

    let s = pw.hess_on_axis(0.0)?;
    let y_row = &s * &e2.x * e1.b - &s * &e1.x * e2.b;
    let mut closed_form = DMatrix::zeros(n + 2, n + 2);
    for i in 0..n {
        closed_form[(0, 1 + i)] = y_row[i];
        closed_form[(1 + i, n + 1)] = -y_row[i];
    }

    let mut mismatch = (&matrix - &closed_form).amax();
    mismatch = mismatch.max(translation.amax());
    Ok(KappaDefect {
        matrix,
        translation,
        closed_form,
        mismatch,
    })
}

/// Element of the Euclidean motion algebra so(n) x R^n.
#[derive(Debug, Clone)]
pub struct EuclideanMotion {
    pub f: DMatrix<f64>,
    pub x: DVector<f64>,
}

/// Quotient homomorphism on fields tangent to the parallel distribution at
/// the origin (`b = 0`): `K -> (-F, -Psi(0))`.
pub fn lambda(k: &KillingField) -> Result<EuclideanMotion> {
    if k.b.abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "lambda is defined for fields with b = 0, got b = {}",
            k.b
        )));
    }
    let jet = k.psi_jet(0.0)?;
    Ok(EuclideanMotion {
        f: -k.f_matrix(),
        x: -jet.psi,
    })
}

/// Bracket in so(n) x R^n, oriented to match the field bracket.
pub fn euclidean_bracket(m1: &EuclideanMotion, m2: &EuclideanMotion) -> EuclideanMotion {
    EuclideanMotion {
        f: &m2.f * &m1.f - &m1.f * &m2.f,
        x: &m2.f * &m1.x - &m1.f * &m2.x,
    }
}

/// Residual of the curvature integrability condition `nabla_K R = (nabla K) . R`
/// on the transverse curvature slots:
///
/// ```text
/// sum_k K^k d_k R_ij + K^+ d_u R_ij  =  [F, Hess H]_ij - 2 a Hess H_ij
/// ```
pub fn integrability_residual(k: &KillingField, p: &Point) -> Result<f64> {
    let pw = &k.pw;
    let jet = k.psi_jet(p.u)?;
    let f = k.f_matrix();
    let k_trans = &jet.psi + &f * &p.x;
    let k_plus = k.a * p.u + k.b;

    let third = pw.profile().third(p.u, &p.x)?;
    let hess_dot = pw.profile().hess_dot(p.u, &p.x)?;
    let hess = pw.profile().hess(p.u, &p.x)?;

    let n = pw.n();
    let mut lhs = DMatrix::zeros(n, n);
    for (r, t_r) in third.iter().enumerate() {
        lhs += t_r * k_trans[r];
    }
    lhs += hess_dot * k_plus;
    let rhs = &f * &hess - &hess * &f - &hess * (2.0 * k.a);
    Ok((lhs - rhs).amax())
}

/// Rank of the `(a, b)` rows: the dimension of the transversal quotient.
pub fn transversal_dimension(basis: &[KillingField], tol: f64) -> usize {
    if basis.is_empty() {
        return 0;
    }
    let mut mtx = DMatrix::zeros(basis.len(), 2);
    for (i, k) in basis.iter().enumerate() {
        mtx[(i, 0)] = k.a;
        mtx[(i, 1)] = k.b;
    }
    crate::geometry::matrix_rank(&mtx, tol)
}

/// Spanning data of the basis evaluated at the origin.
#[derive(Debug, Clone, Copy)]
pub struct HomogeneityReport {
    pub spans_tangent: bool,
    pub spans_vperp: bool,
    pub evaluation_rank: usize,
}

pub fn homogeneity_report(basis: &[KillingField], tol: f64) -> Result<HomogeneityReport> {
    if basis.is_empty() {
        return Ok(HomogeneityReport {
            spans_tangent: false,
            spans_vperp: false,
            evaluation_rank: 0,
        });
    }
    let n = basis[0].n();
    let mut mtx = DMatrix::zeros(basis.len(), n + 2);
    for (r, k) in basis.iter().enumerate() {
        let jet = k.psi_jet(0.0)?;
        mtx[(r, 0)] = k.c;
        for i in 0..n {
            mtx[(r, 1 + i)] = jet.psi[i];
        }
        mtx[(r, n + 1)] = k.b;
    }
    let evaluation_rank = crate::geometry::matrix_rank(&mtx, tol);
    let sub = mtx.columns(0, n + 1).into_owned();
    let vperp_rank = crate::geometry::matrix_rank(&sub, tol);
    Ok(HomogeneityReport {
        spans_tangent: evaluation_rank == n + 2,
        spans_vperp: vperp_rank == n + 1,
        evaluation_rank,
    })
}

/// Reductive splitting of a homogeneous plane wave at the origin:
/// `h = span(L_i)` (the stabilizer) and `m = span(d_-, K_+, [K_+, L_i])`;
/// every bracket `[h, m]` is expanded in the joint basis and the largest
/// h-coefficient (plus any expansion residual) is reported.
#[derive(Debug)]
pub struct ReductiveReport {
    pub h: Vec<KillingField>,
    pub m: Vec<KillingField>,
    pub max_violation: f64,
    /// (a, b) of the transversal field used, after scaling b to 1.
    pub k_plus_ab: (f64, f64),
}

pub fn reductive_decomposition(
    pw: &Arc<PpWave>,
    basis: &[KillingField],
) -> Result<ReductiveReport> {
    let n = pw.n();
    // transversal field: |b| above tolerance, smallest |a|, scaled to b = 1
    let mut best: Option<&KillingField> = None;
    for k in basis {
        if k.b.abs() > 1e-9 {
            match best {
                None => best = Some(k),
                Some(cur) if k.a.abs() / k.b.abs() < cur.a.abs() / cur.b.abs() => best = Some(k),
                _ => {}
            }
        }
    }
    let kp = best.ok_or_else(|| {
        Error::Precondition(
            "not homogeneous at p0: no transversal Killing field in the basis".into(),
        )
    })?;
    let scale = 1.0 / kp.b;
    let jet = kp.psi_jet(0.0)?;
    let k_plus = KillingField::from_initial_data(
        pw.clone(),
        kp.a * scale,
        1.0,
        kp.c * scale,
        kp.f_upper.iter().map(|v| v * scale).collect(),
        &jet.psi * scale,
        &jet.psi_dot * scale,
        &[],
    )?;

    let heis = heisenberg_basis(pw, &[])?;
    let d_minus = KillingField::d_minus(pw.clone());
    let mut m_fields = vec![d_minus.clone(), k_plus.clone()];
    for l_i in &heis.l {
        m_fields.push(bracket(&k_plus, l_i)?);
    }

    // joint parameter-space basis: h columns first
    let h_fields = heis.l.clone();
    let pdim = 3 + n * (n - 1) / 2 + 2 * n;
    let cols = h_fields.len() + m_fields.len();
    let mut basis_mtx = DMatrix::zeros(pdim, cols);
    for (c, k) in h_fields.iter().chain(m_fields.iter()).enumerate() {
        basis_mtx.set_column(c, &k.param_vector()?);
    }
    let svd = basis_mtx.clone().svd(true, true);

    let mut max_violation: f64 = 0.0;
    let mut check = |b: &KillingField| -> Result<()> {
        let v = b.param_vector()?;
        let sol = svd
            .solve(&v, 1e-12)
            .map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
        let resid = (&basis_mtx * &sol - &v).amax();
        let h_part = (0..h_fields.len()).fold(0.0f64, |acc, i| acc.max(sol[i].abs()));
        max_violation = max_violation.max(h_part).max(resid);
        Ok(())
    };

    for l_i in &heis.l {
        for m_j in &m_fields {
            check(&bracket(l_i, m_j)?)?;
        }
    }

    Ok(ReductiveReport {
        h: h_fields,
        m: m_fields,
        max_violation,
        k_plus_ab: (k_plus.a, k_plus.b),
    })
}

/// Linear combination of fields over the same metric (their trajectories all
/// solve the same linear system, so initial data combine linearly).
pub fn linear_combination(
    pw: &Arc<PpWave>,
    terms: &[(f64, &KillingField)],
) -> Result<KillingField> {
    let n = pw.n();
    let m = n * (n - 1) / 2;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    let mut f_upper = vec![0.0; m];
    let mut psi0 = DVector::zeros(n);
    let mut dpsi0 = DVector::zeros(n);
    for (w, k) in terms {
        if !Arc::ptr_eq(&k.pw, pw) {
            return Err(Error::Incompatible(
                "combination of fields over different metrics".into(),
            ));
        }
        a += w * k.a;
        b += w * k.b;
        c += w * k.c;
        for (i, v) in k.f_upper.iter().enumerate() {
            f_upper[i] += w * v;
        }
        let jet = k.psi_jet(0.0)?;
        psi0 += &jet.psi * *w;
        dpsi0 += &jet.psi_dot * *w;
    }
    KillingField::from_initial_data(pw.clone(), a, b, c, f_upper, psi0, dpsi0, &[])
}

/// Structure constants of a basis under the toolkit bracket, as a table
/// keyed `(i, j) -> coefficient vector` in the basis itself (least squares).
pub fn structure_constants(
    pw: &Arc<PpWave>,
    basis: &[KillingField],
) -> Result<BTreeMap<(usize, usize), Vec<f64>>> {
    let _ = pw;
    if basis.is_empty() {
        return Ok(BTreeMap::new());
    }
    let pdim = basis[0].param_vector()?.len();
    let mut mtx = DMatrix::zeros(pdim, basis.len());
    for (i, k) in basis.iter().enumerate() {
        mtx.set_column(i, &k.param_vector()?);
    }
    let svd = mtx.clone().svd(true, true);
    let mut out = BTreeMap::new();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let br = bracket(&basis[i], &basis[j])?;
            let v = br.param_vector()?;
            let sol = svd
                .solve(&v, 1e-10)
                .map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
            out.insert((i, j), sol.iter().copied().collect());
        }
    }
    Ok(out)
}
