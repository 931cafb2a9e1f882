//! Profile functions: the single free datum `H` of a metric in Brinkmann
//! form, together with exact first, second, and third derivative data.
//!
//! Three top-level shapes are supported:
//!
//! * `Symbolic` — an expression tree, differentiated on the tree;
//! * `Quadratic` — `H = ½ xᵀ S(u) x` with an exact derivative family for `S`,
//!   which is how the homogeneous plane-wave families enter (their matrix
//!   profiles have no elementary scalar closed form for n > 2);
//! * `Transformed` — a pullback of another profile through a Brinkmann-form
//!   preserving coordinate change, differentiated by the chain rule against
//!   the base profile's derivatives.
//!
//! `derive` additionally produces thin derived shapes (gradients and entries
//! of quadratic forms, the zero profile) so that third transverse derivatives
//! of a quadratic profile are *structurally* zero.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, Var};
use crate::normalize::BrinkmannTransform;

/// A u-dependent symmetric matrix family S(u), optionally with an exact
/// derivative family dS/du.
#[derive(Clone)]
pub enum SFamily {
    /// Constant S; the derivative is identically zero.
    Constant(DMatrix<f64>),
    /// Closed-form family with optional closed-form derivative.
    Closed {
        s: Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>,
        s_dot: Option<Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>>,
        label: String,
    },
}

impl fmt::Debug for SFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SFamily::Constant(m) => write!(f, "SFamily::Constant({m:?})"),
            SFamily::Closed { label, .. } => write!(f, "SFamily::Closed({label})"),
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-12;

fn check_symmetric(m: &DMatrix<f64>, what: &str, u: f64) -> Result<DMatrix<f64>> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::Invalid(format!(
                    "{what} not symmetric at u = {u}: |S[{i},{j}] - S[{j},{i}]| = {:.3e}",
                    (m[(i, j)] - m[(j, i)]).abs()
                )));
            }
        }
    }
    Ok((m + m.transpose()) * 0.5)
}

impl SFamily {
    pub fn dim(&self) -> Option<usize> {
        match self {
            SFamily::Constant(m) => Some(m.nrows()),
            SFamily::Closed { .. } => None,
        }
    }

    /// S(u), validated and exactly symmetrized.
    pub fn s_at(&self, u: f64) -> Result<DMatrix<f64>> {
        match self {
            SFamily::Constant(m) => Ok(m.clone()),
            SFamily::Closed { s, .. } => check_symmetric(&s(u), "S(u)", u),
        }
    }

    /// dS/du at `u`; errors when no exact derivative family was supplied.
    pub fn s_dot_at(&self, u: f64) -> Result<DMatrix<f64>> {
        match self {
            SFamily::Constant(m) => Ok(DMatrix::zeros(m.nrows(), m.ncols())),
            SFamily::Closed { s_dot: Some(d), .. } => check_symmetric(&d(u), "dS/du", u),
            SFamily::Closed { s_dot: None, .. } => Err(Error::MissingSdot),
        }
    }

    /// The family dS/du as a first-class family (for u-derived profiles).
    pub fn derivative(&self) -> Result<SFamily> {
        match self {
            SFamily::Constant(m) => Ok(SFamily::Constant(DMatrix::zeros(m.nrows(), m.ncols()))),
            SFamily::Closed {
                s_dot: Some(d),
                label,
                ..
            } => Ok(SFamily::Closed {
                s: d.clone(),
                s_dot: None,
                label: format!("d/du {label}"),
            }),
            SFamily::Closed { s_dot: None, .. } => Err(Error::MissingSdot),
        }
    }
}

/// Symbolic body with lazily built derivative trees.
#[derive(Debug, Clone)]
pub struct SymbolicBody {
    pub expr: Expr,
    jet: Arc<OnceLock<SymJet>>,
}

#[derive(Debug)]
struct SymJet {
    grad: Vec<Expr>,    // [i]
    hess: Vec<Expr>,    // [i][j], i<=j, packed
    third: Vec<Expr>,   // [i][j][k], i<=j<=k, packed
    du: Expr,           // dH/du
    du_grad: Vec<Expr>, // d/du dH/dxi
    du_hess: Vec<Expr>, // d/du d2H/dxi dxj, i<=j, packed
}

fn pack2(i: usize, j: usize) -> usize {
    // i <= j
    j * (j + 1) / 2 + i
}

fn pack3(n: usize, i: usize, j: usize, k: usize) -> usize {
    // i <= j <= k; simple dense walk
    let mut idx = 0;
    for a in 0..n {
        for b in a..n {
            for c in b..n {
                if (a, b, c) == (i, j, k) {
                    return idx;
                }
                idx += 1;
            }
        }
    }
    unreachable!()
}

impl SymbolicBody {
    fn new(expr: Expr) -> Self {
        SymbolicBody {
            expr,
            jet: Arc::new(OnceLock::new()),
        }
    }

    fn jet(&self, n: usize) -> &SymJet {
        self.jet.get_or_init(|| {
            let grad: Vec<Expr> = (1..=n).map(|i| self.expr.derive(Var::X(i))).collect();
            let mut hess = Vec::new();
            for j in 0..n {
                for i in 0..=j {
                    // stored at pack2(i, j)
                    let _ = (i, j);
                }
            }
            let mut hess_flat = vec![Expr::num(0.0); n * (n + 1) / 2];
            for j in 0..n {
                for i in 0..=j {
                    hess_flat[pack2(i, j)] = grad[i].derive(Var::X(j + 1));
                }
            }
            hess.extend(hess_flat);
            let mut third = Vec::new();
            for a in 0..n {
                for b in a..n {
                    for c in b..n {
                        third.push(hess[pack2(a, b)].derive(Var::X(c + 1)));
                    }
                }
            }
            let du = self.expr.derive(Var::U);
            let du_grad: Vec<Expr> = grad.iter().map(|g| g.derive(Var::U)).collect();
            let du_hess: Vec<Expr> = hess.iter().map(|h| h.derive(Var::U)).collect();
            SymJet {
                grad,
                hess,
                third,
                du,
                du_grad,
                du_hess,
            }
        })
    }
}

impl PartialEq for SymbolicBody {
    fn eq(&self, other: &Self) -> bool {
        self.expr == other.expr
    }
}

/// Pullback body: a base profile composed with the inverse of a
/// Brinkmann-form preserving transformation.
#[derive(Debug, Clone)]
pub struct TransformedBody {
    pub base: Arc<ProfileFunction>,
    pub transform: Arc<BrinkmannTransform>,
}

#[derive(Debug, Clone)]
pub enum Body {
    Symbolic(SymbolicBody),
    Quadratic {
        s: SFamily,
    },
    /// (S(u) x)_i — first transverse derivative of a quadratic profile.
    QuadGrad {
        s: SFamily,
        i: usize,
    },
    /// S_ij(u) — second transverse derivative of a quadratic profile.
    QuadEntry {
        s: SFamily,
        i: usize,
        j: usize,
    },
    /// The zero profile (third transverse derivative of a quadratic).
    Zero,
    Transformed(TransformedBody),
    /// Derivative of a transformed profile, evaluated by the chain rule.
    TransformedDeriv {
        t: TransformedBody,
        dx: Vec<usize>,
        du: usize,
    },
}

/// The profile function H(u, x1..xn) of a pp-wave.
#[derive(Debug, Clone)]
pub struct ProfileFunction {
    n: usize,
    body: Body,
}

impl ProfileFunction {
    /// Parse a symbolic profile from text, binding free constants.
    pub fn parse(
        text: &str,
        n: usize,
        constants: &HashMap<String, f64>,
    ) -> Result<ProfileFunction> {
        if n == 0 {
            return Err(Error::Invalid(
                "transverse dimension must be at least 1".into(),
            ));
        }
        let expr = parse_expr(text, n, constants)?;
        Ok(ProfileFunction {
            n,
            body: Body::Symbolic(SymbolicBody::new(expr)),
        })
    }

    /// Wrap an already-built expression tree.
    pub fn from_expr(expr: Expr, n: usize) -> Result<ProfileFunction> {
        if expr.max_var_index() > n {
            return Err(Error::VarOutOfRange {
                index: expr.max_var_index(),
                n,
                offset: 0,
            });
        }
        Ok(ProfileFunction {
            n,
            body: Body::Symbolic(SymbolicBody::new(expr)),
        })
    }

    /// Quadratic profile H = ½ xᵀ S(u) x.
    pub fn quadratic(n: usize, s: SFamily) -> Result<ProfileFunction> {
        if let Some(d) = s.dim() {
            if d != n {
                return Err(Error::Invalid(format!("S is {d}x{d} but n = {n}")));
            }
        }
        s.s_at(0.0)?; // symmetry check at one sample
        Ok(ProfileFunction {
            n,
            body: Body::Quadratic { s },
        })
    }

    /// Constant-S quadratic profile (Cahen-Wallach shape).
    pub fn quadratic_constant(s: DMatrix<f64>) -> Result<ProfileFunction> {
        let n = s.nrows();
        let s = check_symmetric(&s, "S", 0.0)?;
        Ok(ProfileFunction {
            n,
            body: Body::Quadratic {
                s: SFamily::Constant(s),
            },
        })
    }

    /// Pullback of `base` through `transform`.
    pub fn transformed(
        base: Arc<ProfileFunction>,
        transform: Arc<BrinkmannTransform>,
    ) -> ProfileFunction {
        let n = base.n;
        ProfileFunction {
            n,
            body: Body::Transformed(TransformedBody { base, transform }),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn body(&self) -> &Body {
        &self.body
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.body, Body::Quadratic { .. })
    }

    /// The S-family of a quadratic profile, if this is one.
    pub fn quadratic_family(&self) -> Option<&SFamily> {
        match &self.body {
            Body::Quadratic { s } => Some(s),
            _ => None,
        }
    }

    /// Evaluate H (or the derived quantity this profile represents).
    pub fn eval(&self, u: f64, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::Domain(format!(
                "expected {}-vector, got {}",
                self.n,
                x.len()
            )));
        }
        match &self.body {
            Body::Symbolic(sym) => sym.expr.eval(u, x.as_slice()),
            Body::Quadratic { s } => {
                let m = s.s_at(u)?;
                Ok(0.5 * (x.transpose() * &m * x)[(0, 0)])
            }
            Body::QuadGrad { s, i } => {
                let m = s.s_at(u)?;
                Ok((&m * x)[*i])
            }
            Body::QuadEntry { s, i, j } => Ok(s.s_at(u)?[(*i, *j)]),
            Body::Zero => Ok(0.0),
            Body::Transformed(t) => transformed_value(t, u, x, &[], 0),
            Body::TransformedDeriv { t, dx, du } => transformed_value(t, u, x, dx, *du),
        }
    }

    /// Exact derivative with respect to the listed variables (at most three
    /// transverse, at most one in u).
    pub fn derive(&self, multi_index: &[Var]) -> Result<ProfileFunction> {
        let n_x = multi_index
            .iter()
            .filter(|v| matches!(v, Var::X(_)))
            .count();
        let n_u = multi_index.len() - n_x;
        if n_x > 3 || n_u > 1 {
            return Err(Error::DerivativeOrder(format!(
                "requested {n_x} transverse and {n_u} u derivatives"
            )));
        }
        for v in multi_index {
            if let Var::X(k) = v {
                if *k == 0 || *k > self.n {
                    return Err(Error::VarOutOfRange {
                        index: *k,
                        n: self.n,
                        offset: 0,
                    });
                }
            }
        }
        let mut out = self.clone();
        for v in multi_index {
            out = out.derive_once(*v)?;
        }
        Ok(out)
    }

    fn derive_once(&self, var: Var) -> Result<ProfileFunction> {
        let n = self.n;
        let body = match (&self.body, var) {
            (Body::Symbolic(sym), v) => Body::Symbolic(SymbolicBody::new(sym.expr.derive(v))),
            (Body::Quadratic { s }, Var::X(i)) => Body::QuadGrad {
                s: s.clone(),
                i: i - 1,
            },
            (Body::Quadratic { s }, Var::U) => Body::Quadratic { s: s.derivative()? },
            (Body::QuadGrad { s, i }, Var::X(j)) => Body::QuadEntry {
                s: s.clone(),
                i: *i,
                j: j - 1,
            },
            (Body::QuadGrad { s, i }, Var::U) => Body::QuadGrad {
                s: s.derivative()?,
                i: *i,
            },
            (Body::QuadEntry { .. }, Var::X(_)) => Body::Zero,
            (Body::QuadEntry { s, i, j }, Var::U) => Body::QuadEntry {
                s: s.derivative()?,
                i: *i,
                j: *j,
            },
            (Body::Zero, _) => Body::Zero,
            (Body::Transformed(t), v) => return transformed_derive(t.clone(), &[], 0, v, n),
            (Body::TransformedDeriv { t, dx, du }, v) => {
                return transformed_derive(t.clone(), dx, *du, v, n)
            }
        };
        Ok(ProfileFunction { n, body })
    }

    /// True when all third transverse derivatives are structurally zero
    /// (quadratic bodies, symbolic bodies whose derivative trees fold to 0,
    /// transforms of such).
    pub fn third_x_derivatives_structurally_zero(&self) -> bool {
        match &self.body {
            Body::Quadratic { .. } => true,
            Body::Symbolic(sym) => {
                let jet = sym.jet(self.n);
                jet.third.iter().all(|e| e.is_zero())
            }
            Body::Transformed(t) => t.base.third_x_derivatives_structurally_zero(),
            Body::Zero => true,
            _ => false,
        }
    }

    // ----- jet interface: derivative data at a point, used by geometry -----

    pub fn grad(&self, u: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        match &self.body {
            Body::Symbolic(sym) => {
                let jet = sym.jet(n);
                let mut g = DVector::zeros(n);
                for i in 0..n {
                    g[i] = jet.grad[i].eval(u, x.as_slice())?;
                }
                Ok(g)
            }
            Body::Quadratic { s } => Ok(&s.s_at(u)? * x),
            Body::Transformed(t) => transformed_grad(t, u, x),
            _ => Err(Error::Invalid("gradient jet on a derived profile".into())),
        }
    }

    pub fn hess(&self, u: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.n;
        match &self.body {
            Body::Symbolic(sym) => {
                let jet = sym.jet(n);
                let mut h = DMatrix::zeros(n, n);
                for j in 0..n {
                    for i in 0..=j {
                        let v = jet.hess[pack2(i, j)].eval(u, x.as_slice())?;
                        h[(i, j)] = v;
                        h[(j, i)] = v;
                    }
                }
                Ok(h)
            }
            Body::Quadratic { s } => s.s_at(u),
            Body::Transformed(t) => transformed_hess(t, u, x),
            _ => Err(Error::Invalid("hessian jet on a derived profile".into())),
        }
    }

    /// Third transverse derivatives: `third[k][(i,j)] = ∂k ∂i ∂j H`.
    pub fn third(&self, u: f64, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let n = self.n;
        match &self.body {
            Body::Symbolic(sym) => {
                let jet = sym.jet(n);
                let mut out = vec![DMatrix::zeros(n, n); n];
                for a in 0..n {
                    for b in a..n {
                        for c in b..n {
                            let v = jet.third[pack3(n, a, b, c)].eval(u, x.as_slice())?;
                            // totally symmetric fill
                            for (i, j, k) in [
                                (a, b, c),
                                (a, c, b),
                                (b, a, c),
                                (b, c, a),
                                (c, a, b),
                                (c, b, a),
                            ] {
                                out[k][(i, j)] = v;
                            }
                        }
                    }
                }
                Ok(out)
            }
            Body::Quadratic { .. } => Ok(vec![DMatrix::zeros(n, n); n]),
            Body::Transformed(t) => transformed_third(t, u, x),
            _ => Err(Error::Invalid(
                "third-derivative jet on a derived profile".into(),
            )),
        }
    }

    pub fn h_dot(&self, u: f64, x: &DVector<f64>) -> Result<f64> {
        match &self.body {
            Body::Symbolic(sym) => sym.jet(self.n).du.eval(u, x.as_slice()),
            Body::Quadratic { s } => {
                let sd = s.s_dot_at(u)?;
                Ok(0.5 * (x.transpose() * &sd * x)[(0, 0)])
            }
            Body::Transformed(t) => transformed_h_dot(t, u, x),
            _ => Err(Error::Invalid(
                "u-derivative jet on a derived profile".into(),
            )),
        }
    }

    pub fn grad_dot(&self, u: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.n;
        match &self.body {
            Body::Symbolic(sym) => {
                let jet = sym.jet(n);
                let mut g = DVector::zeros(n);
                for i in 0..n {
                    g[i] = jet.du_grad[i].eval(u, x.as_slice())?;
                }
                Ok(g)
            }
            Body::Quadratic { s } => Ok(&s.s_dot_at(u)? * x),
            Body::Transformed(t) => transformed_grad_dot(t, u, x),
            _ => Err(Error::Invalid(
                "u-derivative jet on a derived profile".into(),
            )),
        }
    }

    pub fn hess_dot(&self, u: f64, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.n;
        match &self.body {
            Body::Symbolic(sym) => {
                let jet = sym.jet(n);
                let mut h = DMatrix::zeros(n, n);
                for j in 0..n {
                    for i in 0..=j {
                        let v = jet.du_hess[pack2(i, j)].eval(u, x.as_slice())?;
                        h[(i, j)] = v;
                        h[(j, i)] = v;
                    }
                }
                Ok(h)
            }
            Body::Quadratic { s } => s.s_dot_at(u),
            Body::Transformed(t) => transformed_hess_dot(t, u, x),
            _ => Err(Error::Invalid(
                "u-derivative jet on a derived profile".into(),
            )),
        }
    }
}

impl fmt::Display for ProfileFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Symbolic(sym) => write!(f, "{}", sym.expr),
            Body::Quadratic { s } => match s {
                SFamily::Constant(m) => write!(f, "(1/2) x^T S x, S = {m:.6}"),
                SFamily::Closed { label, .. } => write!(f, "(1/2) x^T S(u) x, S = {label}"),
            },
            Body::QuadGrad { i, .. } => write!(f, "(S(u) x)_{}", i + 1),
            Body::QuadEntry { i, j, .. } => write!(f, "S_{}{}(u)", i + 1, j + 1),
            Body::Zero => write!(f, "0"),
            Body::Transformed(_) => write!(f, "<transformed profile>"),
            Body::TransformedDeriv { dx, du, .. } => {
                write!(f, "<transformed profile derivative dx={dx:?} du={du}>")
            }
        }
    }
}

// ----- chain rule for transformed profiles -----
//
// With x' = A x + c(u), u' = a u + b, x'^- = (x^- - c_dot^T A x)/a + beta(u),
// the pulled-back profile in the primed coordinates is
//
//   H'(u', x') = [ H(u, x) + c_ddot(u)^T A x - a beta_dot(u) - |c_dot|^2 / 2 ] / a^2
//
// where u = (u' - b)/a and x = A^T (x' - c(u)). All derivatives below follow
// from d x / d x' = A^T and d x / d u' = -A^T c_dot / a.

struct Frame {
    u: f64,          // base-coordinate u
    x: DVector<f64>, // base-coordinate x
    scale: f64,      // 1 / a^2
}

fn frame(t: &TransformedBody, u_new: f64, x_new: &DVector<f64>) -> Result<Frame> {
    let tr = &t.transform;
    let u = (u_new - tr.b) / tr.a;
    let cj = tr.c_jet(u)?;
    let x = tr.a_matrix.transpose() * (x_new - &cj.c);
    Ok(Frame {
        u,
        x,
        scale: 1.0 / (tr.a * tr.a),
    })
}

fn transformed_raw(t: &TransformedBody, u_new: f64, x_new: &DVector<f64>) -> Result<f64> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let cj = tr.c_jet(fr.u)?;
    let bj = tr.beta_jet(fr.u)?;
    let h = t.base.eval(fr.u, &fr.x)?;
    let lin = (cj.c_ddot.transpose() * &tr.a_matrix * &fr.x)[(0, 0)];
    Ok(fr.scale * (h + lin - tr.a * bj.beta_dot - 0.5 * cj.c_dot.norm_squared()))
}

fn transformed_grad(t: &TransformedBody, u_new: f64, x_new: &DVector<f64>) -> Result<DVector<f64>> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let cj = tr.c_jet(fr.u)?;
    let g = t.base.grad(fr.u, &fr.x)?;
    Ok((&tr.a_matrix * g + cj.c_ddot) * fr.scale)
}

fn transformed_hess(t: &TransformedBody, u_new: f64, x_new: &DVector<f64>) -> Result<DMatrix<f64>> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let h = t.base.hess(fr.u, &fr.x)?;
    let m = &tr.a_matrix * h * tr.a_matrix.transpose() * fr.scale;
    Ok((&m + m.transpose()) * 0.5)
}

fn transformed_third(
    t: &TransformedBody,
    u_new: f64,
    x_new: &DVector<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let base_third = t.base.third(fr.u, &fr.x)?;
    let n = x_new.len();
    let a = &tr.a_matrix;
    let mut out = vec![DMatrix::zeros(n, n); n];
    for k in 0..n {
        let mut m = DMatrix::zeros(n, n);
        for (r, tr_r) in base_third.iter().enumerate() {
            if a[(k, r)] != 0.0 {
                m += a * tr_r * a.transpose() * a[(k, r)];
            }
        }
        out[k] = m * fr.scale;
    }
    Ok(out)
}

fn transformed_h_dot(t: &TransformedBody, u_new: f64, x_new: &DVector<f64>) -> Result<f64> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let cj = tr.c_jet(fr.u)?;
    let bj = tr.beta_jet(fr.u)?;
    let h_dot = t.base.h_dot(fr.u, &fr.x)?;
    let g = t.base.grad(fr.u, &fr.x)?;
    let ag = &tr.a_matrix * g;
    let lin3 = (cj.c_dddot.transpose() * &tr.a_matrix * &fr.x)[(0, 0)];
    let v = h_dot - ag.dot(&cj.c_dot) + lin3 - 2.0 * cj.c_ddot.dot(&cj.c_dot) - tr.a * bj.beta_ddot;
    Ok(fr.scale / tr.a * v)
}

fn transformed_grad_dot(
    t: &TransformedBody,
    u_new: f64,
    x_new: &DVector<f64>,
) -> Result<DVector<f64>> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let cj = tr.c_jet(fr.u)?;
    let gd = t.base.grad_dot(fr.u, &fr.x)?;
    let h = t.base.hess(fr.u, &fr.x)?;
    let vel = tr.a_matrix.transpose() * &cj.c_dot;
    let inner = gd - h * vel;
    Ok((&tr.a_matrix * inner + &cj.c_dddot) * (fr.scale / tr.a))
}

fn transformed_hess_dot(
    t: &TransformedBody,
    u_new: f64,
    x_new: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let fr = frame(t, u_new, x_new)?;
    let tr = &t.transform;
    let cj = tr.c_jet(fr.u)?;
    let hd = t.base.hess_dot(fr.u, &fr.x)?;
    let third = t.base.third(fr.u, &fr.x)?;
    let vel = tr.a_matrix.transpose() * &cj.c_dot;
    let mut inner = hd;
    for (r, tr_r) in third.iter().enumerate() {
        inner -= tr_r * vel[r];
    }
    let m = &tr.a_matrix * inner * tr.a_matrix.transpose() * (fr.scale / tr.a);
    Ok((&m + m.transpose()) * 0.5)
}

/// Dispatch a (possibly mixed) derivative value of a transformed profile.
fn transformed_value(
    t: &TransformedBody,
    u_new: f64,
    x_new: &DVector<f64>,
    dx: &[usize],
    du: usize,
) -> Result<f64> {
    match (du, dx.len()) {
        (0, 0) => transformed_raw(t, u_new, x_new),
        (0, 1) => Ok(transformed_grad(t, u_new, x_new)?[dx[0]]),
        (0, 2) => Ok(transformed_hess(t, u_new, x_new)?[(dx[0], dx[1])]),
        (0, 3) => Ok(transformed_third(t, u_new, x_new)?[dx[2]][(dx[0], dx[1])]),
        (1, 0) => transformed_h_dot(t, u_new, x_new),
        (1, 1) => Ok(transformed_grad_dot(t, u_new, x_new)?[dx[0]]),
        (1, 2) => Ok(transformed_hess_dot(t, u_new, x_new)?[(dx[0], dx[1])]),
        _ => Err(Error::DerivativeOrder(
            "mixed u + third transverse derivative of a transformed profile".into(),
        )),
    }
}

fn transformed_derive(
    t: TransformedBody,
    dx: &[usize],
    du: usize,
    var: Var,
    n: usize,
) -> Result<ProfileFunction> {
    let mut dx = dx.to_vec();
    let mut du = du;
    match var {
        Var::X(i) => dx.push(i - 1),
        Var::U => du += 1,
    }
    dx.sort_unstable();
    if dx.len() > 3 || du > 1 || (dx.len() == 3 && du == 1) {
        return Err(Error::DerivativeOrder(format!(
            "transformed profile supports at most three transverse and one u derivative, got dx={dx:?} du={du}"
        )));
    }
    Ok(ProfileFunction {
        n,
        body: Body::TransformedDeriv { t, dx, du },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symbolic(text: &str, n: usize) -> ProfileFunction {
        ProfileFunction::parse(text, n, &HashMap::new()).unwrap()
    }

    #[test]
    fn quadratic_eval_and_derivatives() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let p = ProfileFunction::quadratic_constant(s).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(p.eval(3.0, &x).unwrap(), 0.0);
        // third derivative is the zero profile, structurally
        let d3 = p.derive(&[Var::X(1), Var::X(2), Var::X(1)]).unwrap();
        assert!(matches!(d3.body(), Body::Zero));
        assert_eq!(d3.eval(0.0, &x).unwrap(), 0.0);
        // u derivative of a constant family vanishes
        let dd = p.derive(&[Var::U]).unwrap();
        assert_eq!(dd.eval(1.0, &x).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_without_sdot_reports_missing_map() {
        let s = SFamily::Closed {
            s: Arc::new(|u: f64| DMatrix::from_row_slice(1, 1, &[u * u])),
            s_dot: None,
            label: "u^2".into(),
        };
        let p = ProfileFunction::quadratic(1, s).unwrap();
        assert!(matches!(p.derive(&[Var::U]), Err(Error::MissingSdot)));
    }

    #[test]
    fn symbolic_second_derivative_example() {
        let p = symbolic("exp(2*x1)", 1);
        let dd = p.derive(&[Var::X(1), Var::X(1)]).unwrap();
        assert!((dd.eval(0.0, &DVector::from_vec(vec![0.0])).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn harmonic_quadratic_laplacian_vanishes() {
        let p = symbolic("(x1^2 - x2^2)/2", 2);
        let dxx = p.derive(&[Var::X(1), Var::X(1)]).unwrap();
        let dyy = p.derive(&[Var::X(2), Var::X(2)]).unwrap();
        let x = DVector::from_vec(vec![0.3, -0.9]);
        assert_eq!(dxx.eval(0.0, &x).unwrap() + dyy.eval(0.0, &x).unwrap(), 0.0);
    }

    #[test]
    fn mixed_partials_commute() {
        let p = symbolic("sin(x1)*cos(x2) + x1^3*x2", 2);
        let d12 = p.derive(&[Var::X(1), Var::X(2)]).unwrap();
        let d21 = p.derive(&[Var::X(2), Var::X(1)]).unwrap();
        for &(a, b) in &[(0.1, 0.2), (-0.7, 0.4), (1.3, -1.1)] {
            let x = DVector::from_vec(vec![a, b]);
            assert!((d12.eval(0.5, &x).unwrap() - d21.eval(0.5, &x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_homogeneity_is_exact() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]);
        let p = ProfileFunction::quadratic_constant(s).unwrap();
        let x = DVector::from_vec(vec![0.4, -1.2]);
        // powers of two scale exactly in binary floating point
        for lambda in [0.5, 2.0, -4.0] {
            let lx = &x * lambda;
            assert_eq!(
                p.eval(1.0, &lx).unwrap(),
                lambda * lambda * p.eval(1.0, &x).unwrap()
            );
        }
        // general scalings hold to rounding
        for lambda in [0.3, -2.7] {
            let lx = &x * lambda;
            let lhs = p.eval(1.0, &lx).unwrap();
            let rhs = lambda * lambda * p.eval(1.0, &x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn structural_plane_wave_detection() {
        assert!(symbolic("(x1^2 - x2^2)/2 + u*x1*x2", 2).third_x_derivatives_structurally_zero());
        assert!(!symbolic("exp(2*x1)", 1).third_x_derivatives_structurally_zero());
    }

    #[test]
    fn grad_hess_jets_match_derive() {
        let p = symbolic("exp(2*x1)*cos(2*x2)", 2);
        let u = 0.4;
        let x = DVector::from_vec(vec![0.2, -0.3]);
        let g = p.grad(u, &x).unwrap();
        for i in 1..=2 {
            let d = p.derive(&[Var::X(i)]).unwrap();
            assert!((g[i - 1] - d.eval(u, &x).unwrap()).abs() < 1e-14);
        }
        let h = p.hess(u, &x).unwrap();
        assert!((h[(0, 1)] - h[(1, 0)]).abs() == 0.0);
        let d12 = p.derive(&[Var::X(1), Var::X(2)]).unwrap();
        assert!((h[(0, 1)] - d12.eval(u, &x).unwrap()).abs() < 1e-14);
    }
}
