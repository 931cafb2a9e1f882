//! Brinkmann-form preserving coordinate changes and normal coordinates.
//!
//! A transformation
//!
//! ```text
//! x'^- = (x^- - c_dot(u)^T A x)/a + beta(u)
//! x'   = A x + c(u)
//! u'   = a u + b
//! ```
//!
//! with constant orthogonal `A`, constant `a != 0`, `b`, and curves `c(u)`,
//! `beta(u)` maps a profile `H` to
//!
//! ```text
//! H'(u', x') = [ H(u, x) + c_ddot(u)^T A x - a beta_dot(u) - |c_dot(u)|^2/2 ] / a^2
//! ```
//!
//! (obtained by matching the (du)^2 coefficient of the pulled-back metric).
//! Normal coordinates centred at the origin are produced by solving
//! `c_ddot(t) = -grad H(t, -c(t))` with `c(0) = c_dot(0) = 0` and then picking
//! `beta_dot` so that `H'(u, 0)` vanishes identically; the transverse gradient
//! vanishes by the choice of `c` alone.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, PpWave};
use crate::ode::{self, linspace, Trajectory};
use crate::profile::ProfileFunction;

const ORTHOGONALITY_TOL: f64 = 1e-12;

/// Value and first three derivatives of the shift curve `c` at one `u`.
#[derive(Debug, Clone)]
pub struct CJet {
    pub c: DVector<f64>,
    pub c_dot: DVector<f64>,
    pub c_ddot: DVector<f64>,
    pub c_dddot: DVector<f64>,
}

/// Value and first two derivatives of `beta` at one `u`.
#[derive(Debug, Clone, Copy)]
pub struct BetaJet {
    pub beta: f64,
    pub beta_dot: f64,
    pub beta_ddot: f64,
}

/// Nodes of a vector curve with stored jets; cubic Hermite in between.
#[derive(Debug, Clone)]
pub struct CurveN {
    dim: usize,
    nodes: Vec<(f64, CJet)>,
}

impl CurveN {
    pub fn zero(dim: usize) -> CurveN {
        let z = DVector::zeros(dim);
        CurveN {
            dim,
            nodes: vec![(
                0.0,
                CJet {
                    c: z.clone(),
                    c_dot: z.clone(),
                    c_ddot: z.clone(),
                    c_dddot: z,
                },
            )],
        }
    }

    /// Sample closed-form jets on a dense mesh over `[u_min, u_max]`.
    pub fn from_jet_fn(u_min: f64, u_max: f64, dim: usize, jet: impl Fn(f64) -> CJet) -> CurveN {
        let count = (((u_max - u_min) / 0.01).ceil() as usize).clamp(2, 40_000) + 1;
        let nodes = linspace(u_min, u_max, count)
            .into_iter()
            .map(|u| (u, jet(u)))
            .collect();
        CurveN { dim, nodes }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> &[(f64, CJet)] {
        &self.nodes
    }

    pub fn covers(&self, u: f64) -> bool {
        if self.nodes.len() == 1 {
            return true; // constant curve
        }
        let (min, max) = (self.nodes[0].0, self.nodes[self.nodes.len() - 1].0);
        let pad = 1e-9 * (max - min).abs().max(1.0);
        u >= min - pad && u <= max + pad
    }

    pub fn jet(&self, u: f64) -> Result<CJet> {
        if self.nodes.len() == 1 {
            return Ok(self.nodes[0].1.clone());
        }
        if !self.covers(u) {
            return Err(Error::OutOfRange {
                u,
                min: self.nodes[0].0,
                max: self.nodes[self.nodes.len() - 1].0,
            });
        }
        let i = self
            .nodes
            .partition_point(|(nu, _)| *nu <= u)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        let (u0, a) = (&self.nodes[i].0, &self.nodes[i].1);
        let (u1, b) = (&self.nodes[i + 1].0, &self.nodes[i + 1].1);
        if (u - u0).abs() <= 1e-13 * (1.0 + u0.abs()) {
            return Ok(a.clone());
        }
        if (u - u1).abs() <= 1e-13 * (1.0 + u1.abs()) {
            return Ok(b.clone());
        }
        let h = u1 - u0;
        let t = (u - u0) / h;
        Ok(CJet {
            c: hermite(&a.c, &a.c_dot, &b.c, &b.c_dot, t, h),
            c_dot: hermite(&a.c_dot, &a.c_ddot, &b.c_dot, &b.c_ddot, t, h),
            c_ddot: hermite(&a.c_ddot, &a.c_dddot, &b.c_ddot, &b.c_dddot, t, h),
            c_dddot: lerp(&a.c_dddot, &b.c_dddot, t),
        })
    }
}

fn hermite(
    y0: &DVector<f64>,
    d0: &DVector<f64>,
    y1: &DVector<f64>,
    d1: &DVector<f64>,
    t: f64,
    h: f64,
) -> DVector<f64> {
    let (t2, t3) = (t * t, t * t * t);
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * ((t3 - 2.0 * t2 + t) * h)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * ((t3 - t2) * h)
}

fn lerp(a: &DVector<f64>, b: &DVector<f64>, t: f64) -> DVector<f64> {
    a * (1.0 - t) + b * t
}

/// Scalar curve with stored jets.
#[derive(Debug, Clone)]
pub struct Curve1 {
    nodes: Vec<(f64, BetaJet)>,
}

impl Curve1 {
    pub fn zero() -> Curve1 {
        Curve1 {
            nodes: vec![(
                0.0,
                BetaJet {
                    beta: 0.0,
                    beta_dot: 0.0,
                    beta_ddot: 0.0,
                },
            )],
        }
    }

    pub fn from_jet_fn(u_min: f64, u_max: f64, jet: impl Fn(f64) -> BetaJet) -> Curve1 {
        let count = (((u_max - u_min) / 0.01).ceil() as usize).clamp(2, 40_000) + 1;
        let nodes = linspace(u_min, u_max, count)
            .into_iter()
            .map(|u| (u, jet(u)))
            .collect();
        Curve1 { nodes }
    }

    pub fn nodes(&self) -> &[(f64, BetaJet)] {
        &self.nodes
    }

    pub fn jet(&self, u: f64) -> Result<BetaJet> {
        if self.nodes.len() == 1 {
            return Ok(self.nodes[0].1);
        }
        let (min, max) = (self.nodes[0].0, self.nodes[self.nodes.len() - 1].0);
        let pad = 1e-9 * (max - min).abs().max(1.0);
        if u < min - pad || u > max + pad {
            return Err(Error::OutOfRange { u, min, max });
        }
        let i = self
            .nodes
            .partition_point(|(nu, _)| *nu <= u)
            .saturating_sub(1)
            .min(self.nodes.len() - 2);
        let (u0, a) = (self.nodes[i].0, self.nodes[i].1);
        let (u1, b) = (self.nodes[i + 1].0, self.nodes[i + 1].1);
        if (u - u0).abs() <= 1e-13 * (1.0 + u0.abs()) {
            return Ok(a);
        }
        if (u - u1).abs() <= 1e-13 * (1.0 + u1.abs()) {
            return Ok(b);
        }
        let h = u1 - u0;
        let t = (u - u0) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * h;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * h;
        Ok(BetaJet {
            beta: a.beta * h00 + a.beta_dot * h10 + b.beta * h01 + b.beta_dot * h11,
            beta_dot: a.beta_dot * h00 + a.beta_ddot * h10 + b.beta_dot * h01 + b.beta_ddot * h11,
            beta_ddot: a.beta_ddot * (1.0 - t) + b.beta_ddot * t,
        })
    }
}

/// Exact jet generators: recompute the higher derivatives of `c` and `beta`
/// from the interpolated `(c, c_dot)` through the defining relations, so that
/// every jet a transformed profile consumes is mutually consistent (plain
/// node interpolation of third derivatives is only O(h^2) accurate, which is
/// not enough for the Killing-residual cancellations).
type CJetGenerator = Arc<
    dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> + Send + Sync,
>;
type BetaJetGenerator =
    Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> Result<(f64, f64)> + Send + Sync>;

#[derive(Clone)]
struct TransformJets {
    c_gen: CJetGenerator,
    beta_gen: BetaJetGenerator,
}

/// A Brinkmann-form preserving coordinate change.
#[derive(Clone)]
pub struct BrinkmannTransform {
    pub a: f64,
    pub b: f64,
    pub a_matrix: DMatrix<f64>,
    pub c: CurveN,
    pub beta: Curve1,
    jet_gen: Option<TransformJets>,
}

impl std::fmt::Debug for BrinkmannTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BrinkmannTransform")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("a_matrix", &self.a_matrix)
            .field("c_nodes", &self.c.nodes().len())
            .field("beta_nodes", &self.beta.nodes().len())
            .field("exact_jets", &self.jet_gen.is_some())
            .finish()
    }
}

impl BrinkmannTransform {
    pub fn new(a: f64, b: f64, a_matrix: DMatrix<f64>, c: CurveN, beta: Curve1) -> Result<Self> {
        if a == 0.0 {
            return Err(Error::Invalid("transform requires a != 0".into()));
        }
        let n = a_matrix.nrows();
        if a_matrix.ncols() != n || c.dim() != n {
            return Err(Error::Invalid("transform dimension mismatch".into()));
        }
        let defect = (&a_matrix * a_matrix.transpose() - DMatrix::identity(n, n)).amax();
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::Invalid(format!(
                "A is not orthogonal: |A A^T - I| = {defect:.3e}"
            )));
        }
        Ok(BrinkmannTransform {
            a,
            b,
            a_matrix,
            c,
            beta,
            jet_gen: None,
        })
    }

    pub fn identity(n: usize) -> Self {
        BrinkmannTransform {
            a: 1.0,
            b: 0.0,
            a_matrix: DMatrix::identity(n, n),
            c: CurveN::zero(n),
            beta: Curve1::zero(),
            jet_gen: None,
        }
    }

    /// Pure transverse rotation (or reflection).
    pub fn rotation(a_matrix: DMatrix<f64>) -> Result<Self> {
        let n = a_matrix.nrows();
        Self::new(1.0, 0.0, a_matrix, CurveN::zero(n), Curve1::zero())
    }

    pub fn n(&self) -> usize {
        self.a_matrix.nrows()
    }

    pub fn c_jet(&self, u_old: f64) -> Result<CJet> {
        let mut jet = self.c.jet(u_old)?;
        if let Some(gen) = &self.jet_gen {
            let (c_ddot, c_dddot) = (gen.c_gen)(u_old, &jet.c, &jet.c_dot)?;
            jet.c_ddot = c_ddot;
            jet.c_dddot = c_dddot;
        }
        Ok(jet)
    }

    pub fn beta_jet(&self, u_old: f64) -> Result<BetaJet> {
        let mut jet = self.beta.jet(u_old)?;
        if let Some(gen) = &self.jet_gen {
            let cj = self.c.jet(u_old)?;
            let (beta_dot, beta_ddot) = (gen.beta_gen)(u_old, &cj.c, &cj.c_dot)?;
            jet.beta_dot = beta_dot;
            jet.beta_ddot = beta_ddot;
        }
        Ok(jet)
    }

    /// Map a point from old to new coordinates.
    pub fn map_point(&self, p: &Point) -> Result<Point> {
        let cj = self.c_jet(p.u)?;
        let bj = self.beta_jet(p.u)?;
        let x_new = &self.a_matrix * &p.x + &cj.c;
        let u_new = self.a * p.u + self.b;
        let xm_new =
            (p.xm - (cj.c_dot.transpose() * &self.a_matrix * &p.x)[(0, 0)]) / self.a + bj.beta;
        Ok(Point {
            xm: xm_new,
            x: x_new,
            u: u_new,
        })
    }

    /// The inverse transformation, with jets carried over exactly.
    pub fn inverse(&self) -> BrinkmannTransform {
        let a = self.a;
        let at = self.a_matrix.transpose();
        let mut c_nodes = Vec::with_capacity(self.c.nodes().len());
        for (u, j) in self.c.nodes() {
            let u_new = a * *u + self.b;
            c_nodes.push((
                u_new,
                CJet {
                    c: -(&at * &j.c),
                    c_dot: -(&at * &j.c_dot) / a,
                    c_ddot: -(&at * &j.c_ddot) / (a * a),
                    c_dddot: -(&at * &j.c_dddot) / (a * a * a),
                },
            ));
        }
        if a < 0.0 {
            c_nodes.reverse();
        }
        let mut b_nodes = Vec::with_capacity(self.beta.nodes().len());
        for (i, (u, bj)) in self.beta.nodes().iter().enumerate() {
            let cj = if self.c.nodes().len() == 1 {
                self.c.nodes()[0].1.clone()
            } else if i < self.c.nodes().len() && (self.c.nodes()[i].0 - *u).abs() < 1e-12 {
                self.c.nodes()[i].1.clone()
            } else {
                self.c.jet(*u).unwrap_or_else(|_| CJet {
                    c: DVector::zeros(self.n()),
                    c_dot: DVector::zeros(self.n()),
                    c_ddot: DVector::zeros(self.n()),
                    c_dddot: DVector::zeros(self.n()),
                })
            };
            let u_new = a * *u + self.b;
            let beta = -a * bj.beta - cj.c_dot.dot(&cj.c);
            let beta_dot = (-a * bj.beta_dot - cj.c_ddot.dot(&cj.c) - cj.c_dot.dot(&cj.c_dot)) / a;
            let beta_ddot =
                (-a * bj.beta_ddot - cj.c_dddot.dot(&cj.c) - 3.0 * cj.c_ddot.dot(&cj.c_dot))
                    / (a * a);
            b_nodes.push((
                u_new,
                BetaJet {
                    beta,
                    beta_dot,
                    beta_ddot,
                },
            ));
        }
        if a < 0.0 {
            b_nodes.reverse();
        }
        // the inverse keeps node-interpolated jets (no exact generator): its
        // accuracy is Hermite-limited, which the round-trip contracts allow
        BrinkmannTransform {
            a: 1.0 / a,
            b: -self.b / a,
            a_matrix: at,
            c: CurveN {
                dim: self.n(),
                nodes: c_nodes,
            },
            beta: Curve1 { nodes: b_nodes },
            jet_gen: None,
        }
    }
}

/// Apply a form-preserving transformation, producing the pulled-back pp-wave.
pub fn apply_transform(pw: &PpWave, transform: &BrinkmannTransform) -> Result<PpWave> {
    if transform.n() != pw.n() {
        return Err(Error::Incompatible(format!(
            "transform acts on n = {}, metric has n = {}",
            transform.n(),
            pw.n()
        )));
    }
    // Every old u in the domain must be covered by the curves.
    for u in [pw.domain().u_min, pw.domain().u_max] {
        if !transform.c.covers(u) {
            return Err(Error::OutOfRange {
                u,
                min: transform.c.nodes().first().map(|n| n.0).unwrap_or(0.0),
                max: transform.c.nodes().last().map(|n| n.0).unwrap_or(0.0),
            });
        }
    }
    let (lo, hi) = (
        transform.a * pw.domain().u_min + transform.b,
        transform.a * pw.domain().u_max + transform.b,
    );
    let domain = Domain {
        u_min: lo.min(hi),
        u_max: lo.max(hi),
        x_radius: pw.domain().x_radius,
    };
    let profile =
        ProfileFunction::transformed(Arc::new(pw.profile().clone()), Arc::new(transform.clone()));
    PpWave::new(pw.n(), profile, domain)
}

/// Outcome of `normalize_at`, with the measured contract deviation.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub pw: PpWave,
    pub transform: BrinkmannTransform,
    /// max |H'(u, 0)| over the verification grid
    pub max_h_on_axis: f64,
    /// max |grad H'(u, 0)| over the verification grid
    pub max_grad_on_axis: f64,
}

const NORMAL_CONTRACT_TOL: f64 = 1e-8;

/// Construct normal Brinkmann coordinates centred at the origin.
///
/// Solves `c_ddot(t) = -grad H(t, -c(t))`, `c(0) = c_dot(0) = 0`, and picks
/// `beta_dot(t) = H(t,-c) + grad H(t,-c)^T c - |c_dot|^2/2`, `beta(0) = 0`,
/// which makes both `H'(u, 0)` and `grad H'(u, 0)` vanish identically. The
/// contract is re-verified numerically on a u-grid before returning.
pub fn normalize_at(pw: &PpWave) -> Result<Normalized> {
    let n = pw.n();
    let dom = pw.domain();
    if dom.u_min > 0.0 || dom.u_max < 0.0 {
        return Err(Error::Invalid(
            "normal coordinates are centred at u = 0, which must lie in the domain".into(),
        ));
    }
    let profile = pw.profile();

    // state y = (c, c_dot, beta)
    let rhs = |u: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let c = y.rows(0, n).into_owned();
        let c_dot = y.rows(n, n).into_owned();
        let x = -&c;
        let g = profile.grad(u, &x)?;
        let h = profile.eval(u, &x)?;
        let mut dy = DVector::zeros(2 * n + 1);
        for i in 0..n {
            dy[i] = c_dot[i];
            dy[n + i] = -g[i];
        }
        dy[2 * n] = h + g.dot(&c) - 0.5 * c_dot.norm_squared();
        Ok(dy)
    };

    let mesh = linspace(
        dom.u_min,
        dom.u_max,
        (((dom.u_max - dom.u_min) / 0.005).ceil() as usize).clamp(2, 80_000) + 1,
    );
    let traj: Trajectory = ode::integrate(
        rhs,
        DVector::zeros(2 * n + 1),
        &mesh,
        ode::DEFAULT_TOL,
        0.005,
    )?;

    // Rebuild exact jets at the integration nodes.
    let mut c_nodes = Vec::with_capacity(traj.nodes().len());
    let mut b_nodes = Vec::with_capacity(traj.nodes().len());
    for node in traj.nodes() {
        let u = node.u;
        let c = node.y.rows(0, n).into_owned();
        let c_dot = node.y.rows(n, n).into_owned();
        let x = -&c;
        let g = profile.grad(u, &x)?;
        let h = profile.eval(u, &x)?;
        let h_dot = profile.h_dot(u, &x)?;
        let g_dot = profile.grad_dot(u, &x)?;
        let hess = profile.hess(u, &x)?;
        let c_ddot = -&g;
        // d/du grad H(u, -c(u)) = grad_dot - Hess c_dot
        let g_total = &g_dot - &hess * &c_dot;
        let c_dddot = -&g_total;
        let beta = node.y[2 * n];
        let beta_dot = h + g.dot(&c) - 0.5 * c_dot.norm_squared();
        let beta_ddot = h_dot + g_total.dot(&c) - c_dot.dot(&c_ddot);
        c_nodes.push((
            u,
            CJet {
                c,
                c_dot,
                c_ddot,
                c_dddot,
            },
        ));
        b_nodes.push((
            u,
            BetaJet {
                beta,
                beta_dot,
                beta_ddot,
            },
        ));
    }

    // exact jet generators over the base profile: all higher derivatives of
    // the curves are recomputed from the interpolated (c, c_dot) so that the
    // chain-rule jets of the transformed profile cancel exactly
    let base = Arc::new(pw.profile().clone());
    let pc = base.clone();
    let c_gen: CJetGenerator = Arc::new(move |u, c, c_dot| {
        let x = -c;
        let g = pc.grad(u, &x)?;
        let g_dot = pc.grad_dot(u, &x)?;
        let hess = pc.hess(u, &x)?;
        let c_ddot = -&g;
        let c_dddot = -(g_dot - hess * c_dot);
        Ok((c_ddot, c_dddot))
    });
    let pb = base.clone();
    let beta_gen: BetaJetGenerator = Arc::new(move |u, c, c_dot| {
        let x = -c;
        let g = pb.grad(u, &x)?;
        let h = pb.eval(u, &x)?;
        let h_dot = pb.h_dot(u, &x)?;
        let g_dot = pb.grad_dot(u, &x)?;
        let hess = pb.hess(u, &x)?;
        let beta_dot = h + g.dot(c) - 0.5 * c_dot.norm_squared();
        let g_total = g_dot - hess * c_dot;
        let beta_ddot = h_dot + g_total.dot(c) - c_dot.dot(&(-&g));
        Ok((beta_dot, beta_ddot))
    });

    let transform = BrinkmannTransform {
        a: 1.0,
        b: 0.0,
        a_matrix: DMatrix::identity(n, n),
        c: CurveN {
            dim: n,
            nodes: c_nodes,
        },
        beta: Curve1 { nodes: b_nodes },
        jet_gen: Some(TransformJets { c_gen, beta_gen }),
    };
    let new_pw = apply_transform(pw, &transform)?;

    // Contract check.
    let origin = DVector::zeros(n);
    let mut max_h: f64 = 0.0;
    let mut max_grad: f64 = 0.0;
    for u in linspace(dom.u_min, dom.u_max, 33) {
        let p = new_pw.profile();
        max_h = max_h.max(p.eval(u, &origin)?.abs());
        max_grad = max_grad.max(p.grad(u, &origin)?.amax());
    }
    if max_h > NORMAL_CONTRACT_TOL || max_grad > NORMAL_CONTRACT_TOL {
        return Err(Error::NotNormalForm { max_h, max_grad });
    }
    Ok(Normalized {
        pw: new_pw,
        transform,
        max_h_on_axis: max_h,
        max_grad_on_axis: max_grad,
    })
}

/// Integrate the frame equation `A' = -A M(u)`, `A(0) = A0`, with per-step
/// polar re-orthonormalization; returns `A` at each requested sample point.
pub fn orthogonal_frame_ode(
    m: &dyn Fn(f64) -> DMatrix<f64>,
    a0: &DMatrix<f64>,
    samples: &[f64],
) -> Result<Vec<(f64, DMatrix<f64>)>> {
    let n = a0.nrows();
    let defect = (a0 * a0.transpose() - DMatrix::identity(n, n)).amax();
    if defect > 1e-10 {
        return Err(Error::Invalid(format!("A(0) not orthogonal: {defect:.3e}")));
    }
    let check_skew = |u: f64| -> Result<DMatrix<f64>> {
        let mm = m(u);
        let s = (&mm + mm.transpose()).amax();
        if s > 1e-10 * mm.amax().max(1.0) {
            return Err(Error::Invalid(format!("M({u}) is not skew-symmetric")));
        }
        Ok(mm)
    };
    check_skew(0.0)?;

    let mut targets: Vec<f64> = samples.to_vec();
    targets.push(0.0);
    targets.sort_by(|x, y| x.partial_cmp(y).unwrap());
    targets.dedup_by(|x, y| (*x - *y).abs() < 1e-14);

    let mut results: Vec<(f64, DMatrix<f64>)> = Vec::new();
    for direction in [1.0f64, -1.0] {
        let mut u = 0.0;
        let mut a = a0.clone();
        if direction > 0.0 {
            results.push((0.0, a.clone()));
        }
        let list: Vec<f64> = if direction > 0.0 {
            targets.iter().copied().filter(|&t| t > 1e-14).collect()
        } else {
            targets
                .iter()
                .rev()
                .copied()
                .filter(|&t| t < -1e-14)
                .collect()
        };
        for target in list {
            let span = target - u;
            let steps = ((span.abs() / 0.005).ceil() as usize).max(1);
            let h = span / steps as f64;
            for _ in 0..steps {
                a = rk4_frame_step(m, &a, u, h)?;
                a = polar_project(&a);
                u += h;
            }
            u = target;
            results.push((u, a.clone()));
        }
    }
    results.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    results.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-14);
    // keep only requested samples (plus 0 which is always present)
    let keep: Vec<(f64, DMatrix<f64>)> = results
        .into_iter()
        .filter(|(u, _)| targets.iter().any(|t| (t - u).abs() < 1e-12))
        .collect();
    Ok(keep)
}

fn rk4_frame_step(
    m: &dyn Fn(f64) -> DMatrix<f64>,
    a: &DMatrix<f64>,
    u: f64,
    h: f64,
) -> Result<DMatrix<f64>> {
    let f = |uu: f64, aa: &DMatrix<f64>| -> DMatrix<f64> { -(aa * m(uu)) };
    let k1 = f(u, a);
    let k2 = f(u + 0.5 * h, &(a + &k1 * (0.5 * h)));
    let k3 = f(u + 0.5 * h, &(a + &k2 * (0.5 * h)));
    let k4 = f(u + h, &(a + &k3 * h));
    Ok(a + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn polar_project(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    u * v_t
}

// ----- JSON round trip for transforms -----

#[derive(Serialize, Deserialize)]
struct TransformJson {
    a: f64,
    b: f64,
    #[serde(rename = "A")]
    a_matrix: Vec<f64>,
    n: usize,
    /// rows [u, c_1..c_n, cdot_1..cdot_n]
    c_nodes: Vec<Vec<f64>>,
    /// rows [u, beta, betadot]
    beta_nodes: Vec<Vec<f64>>,
}

impl BrinkmannTransform {
    pub fn to_json(&self) -> serde_json::Value {
        let n = self.n();
        let c_nodes: Vec<Vec<f64>> = self
            .c
            .nodes()
            .iter()
            .map(|(u, j)| {
                let mut row = vec![*u];
                row.extend(j.c.iter());
                row.extend(j.c_dot.iter());
                row
            })
            .collect();
        let beta_nodes: Vec<Vec<f64>> = self
            .beta
            .nodes()
            .iter()
            .map(|(u, j)| vec![*u, j.beta, j.beta_dot])
            .collect();
        serde_json::to_value(TransformJson {
            a: self.a,
            b: self.b,
            a_matrix: self
                .a_matrix
                .row_iter()
                .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                .collect(),
            n,
            c_nodes,
            beta_nodes,
        })
        .expect("transform serialization cannot fail")
    }

    /// Reconstruct from JSON; second derivatives are recovered from the
    /// Hermite interpolant, so downstream accuracy is interpolation-limited.
    pub fn from_json(value: &serde_json::Value) -> Result<BrinkmannTransform> {
        let tj: TransformJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::Invalid(format!("bad transform JSON: {e}")))?;
        let n = tj.n;
        let a_matrix = DMatrix::from_row_slice(n, n, &tj.a_matrix);
        let mut c_nodes = Vec::with_capacity(tj.c_nodes.len());
        for row in &tj.c_nodes {
            if row.len() != 1 + 2 * n {
                return Err(Error::Invalid("c_nodes row length mismatch".into()));
            }
            c_nodes.push((
                row[0],
                CJet {
                    c: DVector::from_row_slice(&row[1..1 + n]),
                    c_dot: DVector::from_row_slice(&row[1 + n..1 + 2 * n]),
                    c_ddot: DVector::zeros(n),
                    c_dddot: DVector::zeros(n),
                },
            ));
        }
        // recover c_ddot by differencing c_dot between neighbouring nodes
        for i in 0..c_nodes.len() {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(c_nodes.len() - 1);
            if hi > lo {
                let du = c_nodes[hi].0 - c_nodes[lo].0;
                let dd = (&c_nodes[hi].1.c_dot - &c_nodes[lo].1.c_dot) / du;
                c_nodes[i].1.c_ddot = dd;
            }
        }
        let mut beta_nodes = Vec::with_capacity(tj.beta_nodes.len());
        for row in &tj.beta_nodes {
            if row.len() != 3 {
                return Err(Error::Invalid("beta_nodes row length mismatch".into()));
            }
            beta_nodes.push((
                row[0],
                BetaJet {
                    beta: row[1],
                    beta_dot: row[2],
                    beta_ddot: 0.0,
                },
            ));
        }
        BrinkmannTransform::new(
            tj.a,
            tj.b,
            a_matrix,
            CurveN {
                dim: n,
                nodes: c_nodes,
            },
            Curve1 { nodes: beta_nodes },
        )
    }
}
