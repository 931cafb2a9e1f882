//! Metric documents: the JSON input format of the command line, together
//! with the bundled example documents.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use ppwave::error::{Error, Result};
use ppwave::families::{Family, PlaneWaveSpec};
use ppwave::geometry::{Domain, GridSpec, PpWave};
use ppwave::profile::ProfileFunction;

/// A named metric with its sampling domain.
///
/// ```json
/// {
///   "name": "ex_dim3",
///   "n": 1,
///   "profile": {"expr": "exp(2*a*x1)", "constants": {"a": 1.0}},
///   "domain": {"u": [-0.5, 0.5, 9], "x_radius": 0.5, "x_count": 5}
/// }
/// ```
///
/// The profile is either an expression with bound constants or a plane-wave
/// family spec `{"family": "type1", "S_minus": [...], "F": [...], "b_shift": 0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDocument {
    pub name: String,
    pub n: usize,
    pub profile: ProfileDoc,
    pub domain: GridSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileDoc {
    Expr {
        expr: String,
        #[serde(default)]
        constants: HashMap<String, f64>,
    },
    Spec {
        family: Family,
        #[serde(rename = "S_minus")]
        s_minus: Vec<f64>,
        #[serde(rename = "F", default)]
        f_upper: Vec<f64>,
        #[serde(default)]
        b_shift: f64,
    },
}

const BUNDLED: &[(&str, &str)] = &[
    ("ex_dim3", include_str!("../assets/ex_dim3.json")),
    (
        "ehlers_kundt_exp",
        include_str!("../assets/ehlers_kundt_exp.json"),
    ),
    (
        "sippel_goenner",
        include_str!("../assets/sippel_goenner.json"),
    ),
    (
        "rank1_example",
        include_str!("../assets/rank1_example.json"),
    ),
    (
        "cw_ricci_flat_2d",
        include_str!("../assets/cw_ricci_flat_2d.json"),
    ),
    ("cw_flat", include_str!("../assets/cw_flat.json")),
    ("flat_n2", include_str!("../assets/flat_n2.json")),
    (
        "type2_example",
        include_str!("../assets/type2_example.json"),
    ),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

impl MetricDocument {
    /// Resolve a bundled name or read a JSON file.
    pub fn load(path_or_name: &str) -> Result<MetricDocument> {
        let text = match BUNDLED.iter().find(|(n, _)| *n == path_or_name) {
            Some((_, text)) => (*text).to_string(),
            None => std::fs::read_to_string(path_or_name).map_err(|e| {
                Error::Invalid(format!(
                    "`{path_or_name}` is neither a bundled example ({}) nor a readable file: {e}",
                    bundled_names().join(", ")
                ))
            })?,
        };
        let doc: MetricDocument = serde_json::from_str(&text)
            .map_err(|e| Error::Invalid(format!("bad metric document: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        let ordered = matches!(
            self.domain.u.0.partial_cmp(&self.domain.u.1),
            Some(std::cmp::Ordering::Less)
        );
        let radius_ok = self.domain.x_radius.is_finite() && self.domain.x_radius > 0.0;
        if !ordered || !radius_ok {
            return Err(Error::Invalid("bad domain in metric document".into()));
        }
        self.to_ppwave().map(|_| ())
    }

    pub fn plane_wave_spec(&self) -> Result<Option<PlaneWaveSpec>> {
        match &self.profile {
            ProfileDoc::Expr { .. } => Ok(None),
            ProfileDoc::Spec {
                family,
                s_minus,
                f_upper,
                b_shift,
            } => {
                let v = serde_json::json!({
                    "family": family,
                    "n": self.n,
                    "S_minus": s_minus,
                    "F": f_upper,
                    "b_shift": b_shift,
                });
                PlaneWaveSpec::from_json(&v).map(Some)
            }
        }
    }

    pub fn to_ppwave(&self) -> Result<PpWave> {
        let domain = Domain::new(self.domain.u.0, self.domain.u.1, self.domain.x_radius)?;
        match &self.profile {
            ProfileDoc::Expr { expr, constants } => {
                let profile = ProfileFunction::parse(expr, self.n, constants)?;
                PpWave::new(self.n, profile, domain)
            }
            ProfileDoc::Spec { .. } => {
                let spec = self.plane_wave_spec()?.expect("spec variant");
                ppwave::families::to_ppwave(&spec, domain)
            }
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.domain.clone()
    }

    /// Wrap a plane-wave spec as a document (the `generate` command).
    pub fn from_spec(name: &str, spec: &PlaneWaveSpec, domain: &GridSpec) -> MetricDocument {
        let mut f_upper = Vec::new();
        for i in 0..spec.n {
            for j in (i + 1)..spec.n {
                f_upper.push(spec.f[(i, j)]);
            }
        }
        MetricDocument {
            name: name.to_string(),
            n: spec.n,
            profile: ProfileDoc::Spec {
                family: spec.family,
                s_minus: spec
                    .s_minus
                    .row_iter()
                    .flat_map(|r| r.iter().copied().collect::<Vec<_>>())
                    .collect(),
                f_upper,
                b_shift: spec.b_shift,
            },
            domain: domain.clone(),
        }
    }
}
