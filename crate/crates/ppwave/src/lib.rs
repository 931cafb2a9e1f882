//! Computational toolkit for pp-wave Lorentzian geometry in Brinkmann
//! coordinates.
//!
//! Given a profile function `H(u, x1..xn)` — symbolic, or a u-dependent
//! quadratic form — the crate computes connection and curvature data,
//! classifies the metric (plane wave, Ricci-flat, decomposable, homogeneous,
//! reductive), assembles the full algebra of Killing vector fields by solving
//! the reduced Killing equation, generates the known homogeneous plane-wave
//! families, and constructs normal Brinkmann coordinates by integrating the
//! shift ODE.
//!
//! Modules:
//!
//! * [`expr`] — expression grammar, exact differentiation on the tree;
//! * [`profile`] — profile functions and their derivative jets;
//! * [`geometry`] — curvature, Ricci, rank, and the classification predicates;
//! * [`killing`] — Killing fields, the algebra assembly, brackets, the
//!   evaluation maps, integrability, and reductive decompositions;
//! * [`families`] — homogeneous plane-wave families and symmetric spaces;
//! * [`normalize`] — form-preserving coordinate changes and normal
//!   coordinates;
//! * [`ode`] — the shared Runge-Kutta machinery;
//! * [`json`] — canonical (byte-stable) JSON output.

pub mod catalog;
pub mod error;
pub mod expr;
pub mod families;
pub mod geometry;
pub mod json;
pub mod killing;
pub mod normalize;
pub mod ode;
pub mod profile;
pub mod verification;

pub use error::{Error, Result};
pub use geometry::{Domain, GridSpec, Point, PpWave};
pub use profile::ProfileFunction;
