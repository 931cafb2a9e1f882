//! Bundled example metrics used by the verification suite, the CLI, and the
//! tests: the locally homogeneous 3-dimensional wave, the Ehlers-Kundt and
//! Sippel-Goenner 4-dimensional waves, the rotating rank-one plane wave, and
//! flat / Ricci-flat symmetric spaces.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::families::{self, Family, PlaneWaveSpec};
use crate::geometry::{Domain, GridSpec, PpWave};
use crate::profile::ProfileFunction;

/// How a catalog entry defines its profile.
#[derive(Debug, Clone)]
pub enum CatalogKind {
    Expr {
        text: &'static str,
        constants: &'static [(&'static str, f64)],
    },
    Spec(PlaneWaveSpec),
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub n: usize,
    pub kind: CatalogKind,
    pub domain: Domain,
    /// default (u_count, x_count) for grids over this example
    pub grid: (usize, usize),
    pub description: &'static str,
}

pub fn names() -> Vec<&'static str> {
    vec![
        "ex_dim3",
        "ehlers_kundt_exp",
        "sippel_goenner",
        "rank1_example",
        "cw_ricci_flat_2d",
        "cw_flat",
        "flat_n2",
        "type2_example",
    ]
}

pub fn entry(name: &str) -> Result<CatalogEntry> {
    let e = match name {
        "ex_dim3" => CatalogEntry {
            name: "ex_dim3",
            n: 1,
            kind: CatalogKind::Expr { text: "exp(2*a*x1)", constants: &[("a", 1.0)] },
            domain: Domain { u_min: -0.5, u_max: 0.5, x_radius: 0.5 },
            grid: (9, 5),
            description: "3-dimensional wave with exponential profile: locally homogeneous, curvature rank one, not a plane wave",
        },
        "ehlers_kundt_exp" => CatalogEntry {
            name: "ehlers_kundt_exp",
            n: 2,
            kind: CatalogKind::Expr {
                text: "exp(2*a*x1)*cos(2*a*x2)",
                constants: &[("a", 1.0)],
            },
            domain: Domain { u_min: -0.4, u_max: 0.4, x_radius: 0.4 },
            grid: (9, 5),
            description: "Ricci-flat exponential wave (real part of e^{2az}): three Killing fields, neither homogeneous nor transversally homogeneous",
        },
        "sippel_goenner" => CatalogEntry {
            name: "sippel_goenner",
            n: 2,
            kind: CatalogKind::Expr {
                text: "c*exp(a1*x1 - a2*x2)",
                constants: &[("c", 1.0), ("a1", 1.0), ("a2", 1.0)],
            },
            domain: Domain { u_min: -0.4, u_max: 0.4, x_radius: 0.4 },
            grid: (9, 5),
            description: "locally homogeneous but decomposable wave: Killing fields span the tangent space, curvature has a constant kernel direction",
        },
        "rank1_example" => CatalogEntry {
            name: "rank1_example",
            n: 2,
            kind: CatalogKind::Spec(families::bundled("rank1_example").expect("static")),
            domain: Domain { u_min: 0.0, u_max: 2.0, x_radius: 0.5 },
            grid: (9, 5),
            description: "rotating rank-one homogeneous plane wave: curvature rank one everywhere, det(dS/du) = -1, strongly indecomposable",
        },
        "cw_ricci_flat_2d" => CatalogEntry {
            name: "cw_ricci_flat_2d",
            n: 2,
            kind: CatalogKind::Spec(families::bundled("cw_ricci_flat_2d").expect("static")),
            domain: Domain { u_min: -1.0, u_max: 1.0, x_radius: 0.8 },
            grid: (9, 5),
            description: "symmetric plane wave with S = diag(1, -1): Ricci-flat but curved",
        },
        "cw_flat" => CatalogEntry {
            name: "cw_flat",
            n: 2,
            kind: CatalogKind::Spec(families::bundled("cw_flat").expect("static")),
            domain: Domain { u_min: -1.0, u_max: 1.0, x_radius: 0.8 },
            grid: (7, 5),
            description: "flat symmetric space (S = 0)",
        },
        "flat_n2" => CatalogEntry {
            name: "flat_n2",
            n: 2,
            kind: CatalogKind::Expr { text: "0", constants: &[] },
            domain: Domain { u_min: -1.0, u_max: 1.0, x_radius: 1.0 },
            grid: (7, 5),
            description: "flat metric entered symbolically: the assembled algebra attains the dimension bound",
        },
        "type2_example" => CatalogEntry {
            name: "type2_example",
            n: 2,
            kind: CatalogKind::Spec(
                PlaneWaveSpec::new(
                    Family::Type2,
                    DMatrix::identity(2, 2),
                    DMatrix::from_row_slice(2, 2, &[0.0, 0.6, -0.6, 0.0]),
                    1.0,
                )
                .expect("static"),
            ),
            domain: Domain { u_min: -0.5, u_max: 1.5, x_radius: 0.5 },
            grid: (9, 5),
            description: "second homogeneous family (singular at u = -1): geodesically incomplete, curvature rank two",
        },
        other => return Err(Error::Invalid(format!("unknown bundled example `{other}`"))),
    };
    Ok(e)
}

/// Build the pp-wave of a catalog entry.
pub fn build(name: &str) -> Result<PpWave> {
    let e = entry(name)?;
    match &e.kind {
        CatalogKind::Expr { text, constants } => {
            let consts: HashMap<String, f64> =
                constants.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            let profile = ProfileFunction::parse(text, e.n, &consts)?;
            PpWave::new(e.n, profile, e.domain)
        }
        CatalogKind::Spec(spec) => families::to_ppwave(spec, e.domain),
    }
}

/// The default sampling grid of a catalog entry.
pub fn default_grid(name: &str) -> Result<GridSpec> {
    let e = entry(name)?;
    Ok(GridSpec::from_domain(&e.domain, e.grid.0, e.grid.1))
}
