//! Curvature and classification of pp-waves in Brinkmann coordinates.
//!
//! In coordinates `(x^-, x, u)` with metric `2 du (dx^- + H du) + dx^T dx`,
//! everything geometric reduces to derivative data of the profile:
//! the connection is carried by `grad H`, `dH/du`, and `H`; the only
//! curvature components are `R(d_i, d_+, d_j, d_+) = d_i d_j H`; the Ricci
//! tensor has the single component `-laplace(H)`; and the covariant
//! derivative of the curvature is the tensor of third derivatives.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::linspace;
use crate::profile::ProfileFunction;

/// Evaluation / classification domain: a u-interval times a transverse ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u_min: f64,
    pub u_max: f64,
    pub x_radius: f64,
}

impl Domain {
    pub fn new(u_min: f64, u_max: f64, x_radius: f64) -> Result<Domain> {
        let ordered = matches!(u_min.partial_cmp(&u_max), Some(std::cmp::Ordering::Less));
        let radius_ok = x_radius.is_finite() && x_radius > 0.0;
        if !ordered || !radius_ok {
            return Err(Error::Invalid(format!(
                "bad domain: u in [{u_min}, {u_max}], radius {x_radius}"
            )));
        }
        Ok(Domain {
            u_min,
            u_max,
            x_radius,
        })
    }
}

/// A pp-wave in Brinkmann coordinates: transverse dimension, profile, and
/// the domain on which it is examined. Total manifold dimension is n + 2.
#[derive(Debug, Clone)]
pub struct PpWave {
    n: usize,
    profile: ProfileFunction,
    domain: Domain,
}

impl PpWave {
    pub fn new(n: usize, profile: ProfileFunction, domain: Domain) -> Result<PpWave> {
        if n == 0 {
            return Err(Error::Invalid(
                "transverse dimension must be at least 1".into(),
            ));
        }
        if profile.n() != n {
            return Err(Error::Invalid(format!(
                "profile has n = {}, metric declares n = {n}",
                profile.n()
            )));
        }
        Ok(PpWave { n, profile, domain })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total manifold dimension n + 2.
    pub fn dim(&self) -> usize {
        self.n + 2
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Hessian of H along the axis x = 0 (the matrix driving the Killing ODE).
    pub fn hess_on_axis(&self, u: f64) -> Result<DMatrix<f64>> {
        self.profile.hess(u, &DVector::zeros(self.n))
    }
}

/// A point in Brinkmann coordinates. Nothing depends on `xm` (the x^-
/// coordinate); it is carried for bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub xm: f64,
    pub x: DVector<f64>,
    pub u: f64,
}

impl Point {
    pub fn new(xm: f64, x: DVector<f64>, u: f64) -> Point {
        Point { xm, x, u }
    }

    /// Point on the axis x = 0.
    pub fn on_axis(n: usize, u: f64) -> Point {
        Point {
            xm: 0.0,
            x: DVector::zeros(n),
            u,
        }
    }
}

/// The connection data at a point: everything not listed here vanishes.
#[derive(Debug, Clone)]
pub struct ConnectionData {
    pub grad_h: DVector<f64>,
    pub h_dot: f64,
    pub h_val: f64,
}

/// The transverse curvature matrix `R_ij = d_i d_j H` at a base point.
#[derive(Debug, Clone)]
pub struct CurvatureMatrix {
    pub r: DMatrix<f64>,
    pub base: Point,
}

impl CurvatureMatrix {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "base": {
                "xm": self.base.xm,
                "x": self.base.x.iter().copied().collect::<Vec<f64>>(),
                "u": self.base.u,
            },
            "R": self.r.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<f64>>(),
        })
    }
}

/// Third-derivative data of the curvature: `x_block[k] = (d_k d_i d_j H)_{ij}`
/// and, when an exact u-derivative is available, `u_block = (d_u d_i d_j H)_{ij}`.
#[derive(Debug, Clone)]
pub struct NablaCurvature {
    pub x_block: Vec<DMatrix<f64>>,
    pub u_block: Option<DMatrix<f64>>,
}

pub fn connection(pw: &PpWave, p: &Point) -> Result<ConnectionData> {
    Ok(ConnectionData {
        grad_h: pw.profile.grad(p.u, &p.x)?,
        h_dot: pw.profile.h_dot(p.u, &p.x)?,
        h_val: pw.profile.eval(p.u, &p.x)?,
    })
}

pub fn curvature(pw: &PpWave, p: &Point) -> Result<CurvatureMatrix> {
    Ok(CurvatureMatrix {
        r: pw.profile.hess(p.u, &p.x)?,
        base: p.clone(),
    })
}

/// The single Ricci component `Ric(d_+, d_+) = -laplace(H)`.
pub fn ricci(pw: &PpWave, p: &Point) -> Result<f64> {
    Ok(-curvature(pw, p)?.r.trace())
}

/// Rank of the curvature matrix: singular values above `tol * max(1, sigma_max)`.
pub fn curvature_rank(pw: &PpWave, p: &Point, tol: f64) -> Result<usize> {
    let r = curvature(pw, p)?.r;
    Ok(matrix_rank(&r, tol))
}

pub(crate) fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let sv = m.clone().singular_values();
    let cutoff = tol * sv.max().max(1.0);
    sv.iter().filter(|s| **s > cutoff).count()
}

pub fn nabla_curvature(pw: &PpWave, p: &Point) -> Result<NablaCurvature> {
    let x_block = pw.profile.third(p.u, &p.x)?;
    let u_block = match pw.profile.hess_dot(p.u, &p.x) {
        Ok(m) => Some(m),
        Err(Error::MissingSdot) => None,
        Err(e) => return Err(e),
    };
    Ok(NablaCurvature { x_block, u_block })
}

/// How a plane-wave decision was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneWaveMethod {
    /// Third transverse derivatives vanish structurally.
    Structural,
    /// Third transverse derivatives sampled below tolerance on the grid.
    Sampled,
}

/// A pp-wave is a plane wave iff all third transverse derivatives of H vanish.
pub fn is_plane_wave(pw: &PpWave, grid: &[Point], tol: f64) -> Result<(bool, PlaneWaveMethod)> {
    if pw.profile.third_x_derivatives_structurally_zero() {
        return Ok((true, PlaneWaveMethod::Structural));
    }
    let mut max_third: f64 = 0.0;
    for p in grid {
        let t = pw.profile.third(p.u, &p.x)?;
        for m in &t {
            max_third = max_third.max(m.amax());
        }
    }
    Ok((max_third < tol, PlaneWaveMethod::Sampled))
}

/// Search for a constant transverse direction annihilated by the curvature on
/// the whole grid. Such a direction certifies a local product splitting.
///
/// Returns a unit vector `v` with `max_k |Hess H(p_k) v| <= 10 * tol` when the
/// stacked-Hessian matrix has a singular value below `tol * max(1, sigma_max)`.
pub fn decomposability_certificate(
    pw: &PpWave,
    grid: &[Point],
    tol: f64,
) -> Result<Option<DVector<f64>>> {
    if grid.is_empty() {
        return Err(Error::Invalid(
            "decomposability check needs a nonempty grid".into(),
        ));
    }
    let n = pw.n;
    let mut stacked = DMatrix::zeros(n * grid.len(), n);
    for (k, p) in grid.iter().enumerate() {
        let h = pw.profile.hess(p.u, &p.x)?;
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&h);
    }
    let svd = stacked.clone().svd(false, true);
    let sv = &svd.singular_values;
    let sigma_max = sv.max();
    let (mut sigma_min, mut min_idx) = (f64::INFINITY, 0);
    for (i, s) in sv.iter().enumerate() {
        if *s < sigma_min {
            sigma_min = *s;
            min_idx = i;
        }
    }
    if sigma_min >= tol * sigma_max.max(1.0) {
        return Ok(None);
    }
    let v_t = svd.v_t.expect("svd with v requested");
    let mut v: DVector<f64> = v_t.row(min_idx).transpose();
    // deterministic sign: largest-magnitude component positive
    let lead = v
        .iter()
        .cloned()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if lead < 0.0 {
        v = -v;
    }
    Ok(Some(v))
}

/// Outcome of checking the "Ricci-flat and rank one implies flat" statement.
#[derive(Debug, Clone)]
pub enum RicciFlatRankReport {
    /// Hypothesis held on the whole grid; the metric is flat there and the
    /// largest curvature entry is reported.
    FlatConfirmed { max_abs_r: f64 },
    /// Some grid point violates Ricci-flatness or has rank above one.
    HypothesisNotMet { reason: String },
}

pub fn ricci_flat_rank_check(pw: &PpWave, grid: &[Point], tol: f64) -> Result<RicciFlatRankReport> {
    let mut max_abs_r: f64 = 0.0;
    for p in grid {
        let r = curvature(pw, p)?.r;
        let ric = -r.trace();
        if ric.abs() > tol {
            return Ok(RicciFlatRankReport::HypothesisNotMet {
                reason: format!("Ricci = {ric:.3e} at u = {}, not flat to {tol:.1e}", p.u),
            });
        }
        let rank = matrix_rank(&r, 1e-9);
        if rank > 1 {
            return Ok(RicciFlatRankReport::HypothesisNotMet {
                reason: format!("curvature rank {rank} > 1 at u = {}", p.u),
            });
        }
        max_abs_r = max_abs_r.max(r.amax());
    }
    if max_abs_r >= tol {
        return Ok(RicciFlatRankReport::HypothesisNotMet {
            reason: format!("max |R| = {max_abs_r:.3e} exceeds {tol:.1e}"),
        });
    }
    Ok(RicciFlatRankReport::FlatConfirmed { max_abs_r })
}

/// Histogram of curvature ranks over a grid, plus the points of rank <= 1
/// (the "exceptional set" for the rank hypothesis).
pub fn rank_survey(
    pw: &PpWave,
    grid: &[Point],
    tol: f64,
) -> Result<(BTreeMap<usize, usize>, Vec<Point>)> {
    let mut hist = BTreeMap::new();
    let mut exceptional = Vec::new();
    for p in grid {
        let r = curvature_rank(pw, p, tol)?;
        *hist.entry(r).or_insert(0) += 1;
        if r <= 1 {
            exceptional.push(p.clone());
        }
    }
    Ok((hist, exceptional))
}

/// Tensor-product sampling grid specification.
///
/// JSON shape: `{"u": [min, max, count], "x_radius": rho, "x_count": k}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec {
    pub u: (f64, f64, usize),
    pub x_radius: f64,
    pub x_count: usize,
}

impl GridSpec {
    pub fn from_domain(d: &Domain, u_count: usize, x_count: usize) -> GridSpec {
        GridSpec {
            u: (d.u_min, d.u_max, u_count),
            x_radius: d.x_radius,
            x_count,
        }
    }

    /// All grid points: u-line times the transverse tensor grid restricted to
    /// the ball of radius `x_radius` (the origin is always included).
    pub fn points(&self, n: usize) -> Vec<Point> {
        let us = linspace(self.u.0, self.u.1, self.u.2.max(1));
        let axis = linspace(-self.x_radius, self.x_radius, self.x_count.max(1));
        let mut xs: Vec<DVector<f64>> = vec![DVector::zeros(n)];
        let mut stack: Vec<Vec<f64>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for partial in &stack {
                for &v in &axis {
                    let mut p = partial.clone();
                    p.push(v);
                    next.push(p);
                }
            }
            stack = next;
        }
        for coords in stack {
            let v = DVector::from_vec(coords);
            if v.norm() <= self.x_radius * (1.0 + 1e-12) && v.norm() > 0.0 {
                xs.push(v);
            }
        }
        let mut out = Vec::with_capacity(us.len() * xs.len());
        for &u in &us {
            for x in &xs {
                out.push(Point {
                    xm: 0.0,
                    x: x.clone(),
                    u,
                });
            }
        }
        out
    }

    /// Only the u-samples, on the axis.
    pub fn axis_points(&self, n: usize) -> Vec<Point> {
        linspace(self.u.0, self.u.1, self.u.2.max(1))
            .into_iter()
            .map(|u| Point::on_axis(n, u))
            .collect()
    }
}
