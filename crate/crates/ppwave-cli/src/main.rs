//! Command-line front end: inspect metrics, assemble Killing algebras,
//! generate plane-wave family documents, build normal coordinates, and run
//! the bundled verification suite.

mod doc;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::json;

use doc::MetricDocument;
use ppwave::error::Error;
use ppwave::geometry::{self, GridSpec};
use ppwave::json::to_canonical_string;
use ppwave::killing;
use ppwave::normalize;
use ppwave::ode::linspace;
use ppwave::verification;

#[derive(Parser)]
#[command(
    name = "ppwave",
    version,
    about = "pp-wave geometry in Brinkmann coordinates: curvature, Killing algebras, \
             homogeneous plane-wave families, and coordinate normalization"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Curvature and classification report for a metric document
    Inspect {
        /// bundled example name or path to a metric document JSON file
        doc: String,
        /// override the sampling grid: {"u":[min,max,count],"x_radius":r,"x_count":k}
        #[arg(long)]
        grid: Option<String>,
        /// rank / certificate tolerance
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// emit the canonical JSON report instead of text
        #[arg(long)]
        json: bool,
    },
    /// Assemble the Killing algebra of a metric document
    Killing {
        doc: String,
        /// construct normal coordinates first when the profile is not normal
        #[arg(long)]
        auto_normalize: bool,
        #[arg(long)]
        grid: Option<String>,
        /// singular-value threshold (relative) for the kernel extraction
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Emit a metric document for a plane-wave family spec
    Generate {
        /// bundled spec name (rank1_example, cw_flat, cw_ricci_flat_2d) or a
        /// path to a spec JSON file
        spec: String,
        /// document name to embed
        #[arg(long)]
        name: Option<String>,
    },
    /// Construct normal coordinates centred at the origin
    Normalize {
        doc: String,
        #[arg(long)]
        json: bool,
    },
    /// Run the bundled verification suite (named check or --all)
    #[command(name = "verify-paper")]
    VerifyPaper {
        /// check name; see --all for the list
        name: Option<String>,
        /// run every check
        #[arg(long)]
        all: bool,
        /// write per-u CSV curves next to the named check
        #[arg(long, value_name = "PATH")]
        emit_csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.cmd {
        Cmd::Inspect {
            doc,
            grid,
            tol,
            json,
        } => cmd_inspect(&doc, grid.as_deref(), tol, json),
        Cmd::Killing {
            doc,
            auto_normalize,
            grid,
            tol,
            json,
        } => cmd_killing(&doc, auto_normalize, grid.as_deref(), tol, json),
        Cmd::Generate { spec, name } => cmd_generate(&spec, name.as_deref()),
        Cmd::Normalize { doc, json } => cmd_normalize(&doc, json),
        Cmd::VerifyPaper {
            name,
            all,
            emit_csv,
        } => cmd_verify(name.as_deref(), all, emit_csv),
    }
}

fn parse_grid(doc: &MetricDocument, over: Option<&str>) -> Result<GridSpec, Error> {
    match over {
        None => Ok(doc.grid()),
        Some(text) => {
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("bad --grid value: {e}")))
        }
    }
}

fn cmd_inspect(name: &str, grid: Option<&str>, tol: f64, json: bool) -> Result<ExitCode, Error> {
    let doc = MetricDocument::load(name)?;
    let pw = doc.to_ppwave()?;
    let spec = doc.plane_wave_spec()?;
    let grid_spec = parse_grid(&doc, grid)?;
    let points = grid_spec.points(pw.n());

    let mut max_ricci: f64 = 0.0;
    for p in &points {
        max_ricci = max_ricci.max(geometry::ricci(&pw, p)?.abs());
    }
    let ricci_flat = max_ricci < tol.max(1e-12);
    let (plane, method) = geometry::is_plane_wave(&pw, &points, tol)?;
    let (hist, exceptional) = geometry::rank_survey(&pw, &points, tol)?;
    let cert = geometry::decomposability_certificate(&pw, &points, tol)?;

    // for family-backed documents, a nonvanishing det(dS/du) witnesses
    // indecomposability even when the rank is low
    let witness = match &spec {
        Some(s) => {
            let us = linspace(doc.domain.u.0, doc.domain.u.1, doc.domain.u.2.max(2));
            let mut min_det = f64::INFINITY;
            for &u in &us {
                min_det = min_det.min(ppwave::families::s_dot_of(s, u)?.determinant().abs());
            }
            Some(min_det > 1e-9)
        }
        None => None,
    };

    let hist_json: serde_json::Map<String, serde_json::Value> = hist
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let report = json!({
        "name": doc.name,
        "n": doc.n,
        "dim_bound": killing::dim_bound(doc.n),
        "ricci_flat": ricci_flat,
        "max_abs_ricci": max_ricci,
        "plane_wave": plane,
        "plane_wave_method": method,
        "curvature_rank_histogram": hist_json,
        "rank_exceptional_points": exceptional.len(),
        "decomposability_certificate": cert.as_ref().map(|v| v.iter().copied().collect::<Vec<f64>>()),
        "det_sdot_witness": witness,
    });
    if json {
        println!("{}", to_canonical_string(&report));
    } else {
        println!(
            "metric `{}` (n = {}, dimension {})",
            doc.name,
            doc.n,
            doc.n + 2
        );
        println!("  Ricci-flat:          {ricci_flat} (max |Ric| = {max_ricci:.3e})");
        println!("  plane wave:          {plane} ({method:?} test)");
        println!("  rank histogram:      {hist:?}");
        match &cert {
            Some(v) => println!("  decomposable:        certificate {:?}", v.as_slice()),
            None => println!("  decomposable:        no certificate found"),
        }
        if let Some(w) = witness {
            println!("  det(dS/du) witness:  {w}");
        }
        println!("  dim bound for k:     {}", killing::dim_bound(doc.n));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_killing(
    name: &str,
    auto_normalize: bool,
    grid: Option<&str>,
    tol: f64,
    json: bool,
) -> Result<ExitCode, Error> {
    let doc = MetricDocument::load(name)?;
    let raw = doc.to_ppwave()?;
    let grid_spec = parse_grid(&doc, grid)?;
    let us = linspace(grid_spec.u.0, grid_spec.u.1, grid_spec.u.2.max(2));

    let normal = killing::require_normal_form(&raw, &us, 1e-8)?;
    let (pw, transform) = if normal {
        (Arc::new(raw), None)
    } else if auto_normalize {
        let norm = normalize::normalize_at(&raw)?;
        (Arc::new(norm.pw), Some(norm.transform))
    } else {
        let (max_h, max_grad) = killing::normal_form_deviation(&raw, &us)?;
        return Err(Error::Invalid(format!(
            "profile is not in normal form (max |H(u,0)| = {max_h:.3e}, max |grad H(u,0)| = \
             {max_grad:.3e}); pass --auto-normalize to construct normal coordinates first"
        )));
    };

    let points = grid_spec.points(pw.n());
    let alg = killing::killing_algebra(&pw, &points, tol)?;
    let trans_dim = killing::transversal_dimension(&alg.basis, tol);
    let homog = killing::homogeneity_report(&alg.basis, tol)?;
    let constants = killing::structure_constants(&pw, &alg.basis)?;

    let basis_json: Vec<serde_json::Value> = alg
        .basis
        .iter()
        .map(|k| k.to_json())
        .collect::<Result<_, _>>()?;
    let brackets: serde_json::Map<String, serde_json::Value> = constants
        .iter()
        .map(|((i, j), coeffs)| (format!("{i},{j}"), json!(coeffs)))
        .collect();
    let report = json!({
        "name": doc.name,
        "auto_normalized": transform.is_some(),
        "dimension": alg.dimension,
        "dim_bound": killing::dim_bound(pw.n()),
        "nullity": alg.nullity,
        "singular_values": alg.singular_values,
        "singular_value_gap": alg.gap,
        "threshold": alg.threshold,
        "transversal_dimension": trans_dim,
        "homogeneity": {
            "spans_tangent": homog.spans_tangent,
            "spans_Vperp": homog.spans_vperp,
            "evaluation_rank": homog.evaluation_rank,
        },
        "basis": basis_json,
        "brackets": brackets,
        "transform": transform.as_ref().map(|t| t.to_json()),
    });
    if json {
        println!("{}", to_canonical_string(&report));
    } else {
        println!("Killing algebra of `{}`:", doc.name);
        if transform.is_some() {
            println!("  (normal coordinates constructed first)");
        }
        println!(
            "  dimension:            {} (bound {})",
            alg.dimension,
            killing::dim_bound(pw.n())
        );
        println!("  singular-value gap:   {:.3e}", alg.gap);
        println!("  dim k/k(V):           {trans_dim}");
        println!(
            "  homogeneity:          spans tangent = {}, spans Vperp = {} (rank {})",
            homog.spans_tangent, homog.spans_vperp, homog.evaluation_rank
        );
        println!("  basis fields:         {} (d_- first)", alg.basis.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(spec_arg: &str, name: Option<&str>) -> Result<ExitCode, Error> {
    let (spec, default_name, domain) = match ppwave::families::bundled(spec_arg) {
        Some(s) => {
            let entry = ppwave::catalog::entry(spec_arg)?;
            let d = GridSpec::from_domain(&entry.domain, entry.grid.0, entry.grid.1);
            (s, spec_arg.to_string(), d)
        }
        None => {
            let text = std::fs::read_to_string(spec_arg).map_err(|e| {
                Error::Invalid(format!(
                    "`{spec_arg}` is not a bundled spec or readable file: {e}"
                ))
            })?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Error::Invalid(format!("bad spec JSON: {e}")))?;
            let s = ppwave::families::PlaneWaveSpec::from_json(&value)?;
            let lo = if s.b_shift > 0.0 {
                -0.5 * s.b_shift
            } else {
                -1.0
            };
            let d = GridSpec {
                u: (lo, lo + 2.0, 9),
                x_radius: 0.5,
                x_count: 5,
            };
            (s, "generated".to_string(), d)
        }
    };
    let doc = MetricDocument::from_spec(name.unwrap_or(&default_name), &spec, &domain);
    let value = serde_json::to_value(&doc).map_err(|e| Error::Invalid(e.to_string()))?;
    println!("{}", to_canonical_string(&value));
    Ok(ExitCode::SUCCESS)
}

fn cmd_normalize(name: &str, json: bool) -> Result<ExitCode, Error> {
    let doc = MetricDocument::load(name)?;
    let pw = doc.to_ppwave()?;
    let norm = normalize::normalize_at(&pw)?;
    let report = json!({
        "name": doc.name,
        "max_h_on_axis": norm.max_h_on_axis,
        "max_grad_on_axis": norm.max_grad_on_axis,
        "convention": "c_ddot = -grad H(u, -c); beta_dot = H(u,-c) + grad H(u,-c).c - |c_dot|^2/2",
        "transform": norm.transform.to_json(),
    });
    if json {
        println!("{}", to_canonical_string(&report));
    } else {
        println!("normal coordinates for `{}`:", doc.name);
        println!("  max |H(u,0)|      = {:.3e}", norm.max_h_on_axis);
        println!("  max |grad H(u,0)| = {:.3e}", norm.max_grad_on_axis);
        println!("  shift curve nodes = {}", norm.transform.c.nodes().len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(name: Option<&str>, all: bool, emit_csv: Option<PathBuf>) -> Result<ExitCode, Error> {
    let results = if all {
        verification::run_all()
    } else {
        match name {
            Some(n) => vec![verification::run_check(n)?],
            None => {
                return Err(Error::Invalid(format!(
                    "pass a check name or --all; checks: {}",
                    verification::check_names().join(", ")
                )))
            }
        }
    };
    if let Some(path) = &emit_csv {
        for r in &results {
            if let Ok(csv) = verification::csv_curves(r.name) {
                let target = if results.len() == 1 {
                    path.clone()
                } else {
                    path.with_file_name(format!(
                        "{}_{}.csv",
                        path.file_stem()
                            .and_then(|s| s.to_str())
                            .unwrap_or("curves"),
                        r.name
                    ))
                };
                std::fs::write(&target, csv)
                    .map_err(|e| Error::Invalid(format!("cannot write {target:?}: {e}")))?;
                eprintln!("wrote {}", target.display());
            }
        }
    }
    let mut failed = false;
    for r in &results {
        println!(
            "[{}] {} — {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        failed |= !r.passed;
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}
