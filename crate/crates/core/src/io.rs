//! File formats: JSON for measures, bodies, grids and reports; OBJ for
//! three-dimensional bodies; CSV for planar profiles and per-node fields.
//!
//! All writers go through a temp-file-and-rename so a crashed process
//! never leaves a half-written artifact behind. Serialization is
//! deterministic: identical data produces byte-identical files.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, DensityField, Measure};
use crate::solver::{SolveReport, SolveStatus};
use crate::sphere::SphereGrid;
use crate::vec::Vec3;
use crate::verify::ResidualReport;

/// Write `bytes` to `path` atomically (temp file in the same directory,
/// then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{stem}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn to_pretty_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn vec_components(v: &Vec3, dim: usize) -> Vec<f64> {
    if dim == 2 {
        vec![v.x(), v.y()]
    } else {
        vec![v.x(), v.y(), v.z()]
    }
}

fn vec_from_components(c: &[f64], dim: usize, what: &str) -> Result<Vec3> {
    match (dim, c.len()) {
        (2, 2) => Ok(Vec3::planar(c[0], c[1])),
        (3, 3) => Ok(Vec3::new(c[0], c[1], c[2])),
        _ => Err(Error::Schema(format!(
            "{what} has {} components in dimension {dim}",
            c.len()
        ))),
    }
}

// ---------------------------------------------------------------------
// Measures

#[derive(Serialize, Deserialize)]
struct AtomJson {
    dir: Vec<f64>,
    mass: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<AtomJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid_level: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

pub fn measure_to_json(m: &Measure) -> Result<Vec<u8>> {
    let json = match m {
        Measure::Atomic(a) => MeasureJson {
            dim: a.dim,
            kind: "atomic".into(),
            atoms: Some(
                a.dirs
                    .iter()
                    .zip(&a.masses)
                    .map(|(d, m)| AtomJson {
                        dir: vec_components(d, a.dim),
                        mass: *m,
                    })
                    .collect(),
            ),
            grid_level: None,
            values: None,
        },
        Measure::Density(d) => {
            let Some(level) = d.grid.level else {
                return Err(Error::Schema(
                    "only densities on standard grids (built from a dimension and a \
                     level) can be serialized; this grid has custom directions"
                        .into(),
                ));
            };
            MeasureJson {
                dim: d.grid.dim,
                kind: "density".into(),
                atoms: None,
                grid_level: Some(level),
                values: Some(d.values.clone()),
            }
        }
    };
    to_pretty_bytes(&json)
}

/// Parse a measure, collecting non-fatal issues (near-unit directions
/// that were renormalized) into `warnings`.
pub fn measure_from_json(bytes: &[u8], warnings: &mut Vec<String>) -> Result<Measure> {
    let json: MeasureJson = serde_json::from_slice(bytes)?;
    if json.dim != 2 && json.dim != 3 {
        return Err(Error::Schema(format!("unsupported dimension {}", json.dim)));
    }
    match json.kind.as_str() {
        "atomic" => {
            let atoms = json
                .atoms
                .ok_or_else(|| Error::Schema("atomic measure without atoms".into()))?;
            let mut dirs = Vec::with_capacity(atoms.len());
            let mut masses = Vec::with_capacity(atoms.len());
            let mut renormalized = 0usize;
            for (i, atom) in atoms.iter().enumerate() {
                let raw = vec_from_components(&atom.dir, json.dim, "atom direction")?;
                let n = raw.norm();
                if (n - 1.0).abs() > 1e-6 {
                    return Err(Error::Schema(format!(
                        "atom {i} direction has norm {n}, too far from the unit sphere"
                    )));
                }
                if (n - 1.0).abs() > 1e-12 {
                    renormalized += 1;
                }
                if atom.mass < 0.0 {
                    return Err(Error::Schema(format!(
                        "atom {i} has negative mass {}",
                        atom.mass
                    )));
                }
                dirs.push(raw.scale(1.0 / n));
                masses.push(atom.mass);
            }
            if renormalized > 0 {
                warnings.push(format!(
                    "renormalized {renormalized} atom direction(s) onto the unit sphere"
                ));
            }
            Ok(Measure::Atomic(AtomicMeasure::new(json.dim, dirs, masses)?))
        }
        "density" => {
            let level = json
                .grid_level
                .ok_or_else(|| Error::Schema("density measure without grid_level".into()))?;
            let values = json
                .values
                .ok_or_else(|| Error::Schema("density measure without values".into()))?;
            if let Some(bad) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
                return Err(Error::Schema(format!("invalid density value {bad}")));
            }
            let grid = Arc::new(SphereGrid::build(json.dim, level)?);
            if values.len() != grid.len() {
                return Err(Error::Schema(format!(
                    "{} density values on a grid with {} cells",
                    values.len(),
                    grid.len()
                )));
            }
            Ok(Measure::Density(DensityField::new(grid, values)?))
        }
        other => Err(Error::Schema(format!("unknown measure kind {other:?}"))),
    }
}

// ---------------------------------------------------------------------
// Bodies

#[derive(Serialize, Deserialize)]
struct BodyJson {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Vec<usize>>,
}

pub fn body_to_json(body: &Polytope) -> Result<Vec<u8>> {
    let json = BodyJson {
        dim: body.dim,
        vertices: body
            .vertices
            .iter()
            .map(|v| vec_components(v, body.dim))
            .collect(),
        facets: body.facets.iter().map(|f| f.vertices.clone()).collect(),
    };
    to_pretty_bytes(&json)
}

/// Rebuild a body from its stored vertices. The facet lists in the file
/// are informational; the hull is recomputed so the result is guaranteed
/// consistent.
pub fn body_from_json(bytes: &[u8]) -> Result<Polytope> {
    let json: BodyJson = serde_json::from_slice(bytes)?;
    if json.dim != 2 && json.dim != 3 {
        return Err(Error::Schema(format!("unsupported dimension {}", json.dim)));
    }
    if json.vertices.len() < json.dim + 1 {
        return Err(Error::Schema(format!(
            "{} vertices cannot span a {}-dimensional body",
            json.vertices.len(),
            json.dim
        )));
    }
    let points = json
        .vertices
        .iter()
        .map(|c| vec_from_components(c, json.dim, "vertex"))
        .collect::<Result<Vec<_>>>()?;
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::Schema("non-finite vertex coordinate".into()));
    }
    Polytope::from_points(json.dim, &points)
}

// ---------------------------------------------------------------------
// Grids

#[derive(Serialize)]
struct GridJson {
    dim: usize,
    level: Option<u32>,
    dirs: Vec<Vec<f64>>,
    cell_areas: Vec<f64>,
}

pub fn grid_to_json(grid: &SphereGrid) -> Result<Vec<u8>> {
    to_pretty_bytes(&GridJson {
        dim: grid.dim,
        level: grid.level,
        dirs: grid
            .dirs
            .iter()
            .map(|d| vec_components(d, grid.dim))
            .collect(),
        cell_areas: grid.areas.clone(),
    })
}

// ---------------------------------------------------------------------
// Reports

#[derive(Serialize)]
struct SolveReportJson<'a> {
    status: &'a str,
    iterations: usize,
    residual: f64,
    grad_inf_norm: f64,
    phi_final: f64,
    phi_history: &'a [f64],
    warnings: &'a [String],
    options: serde_json::Value,
    radial_values: &'a [f64],
}

pub fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::DegeneracyDetected => "degeneracy-detected",
        SolveStatus::MaxIters => "max-iters",
    }
}

/// Serialize a solve report together with an echo of the options that
/// produced it, so a report file is self-describing.
pub fn solve_report_to_json(
    report: &SolveReport,
    options_echo: serde_json::Value,
) -> Result<Vec<u8>> {
    to_pretty_bytes(&SolveReportJson {
        status: status_name(report.status),
        iterations: report.iterations,
        residual: report.residual,
        grad_inf_norm: report.grad_inf_norm,
        phi_final: *report.phi_history.last().unwrap_or(&f64::NAN),
        phi_history: &report.phi_history,
        warnings: &report.warnings,
        options: options_echo,
        radial_values: &report.radial.values,
    })
}

#[derive(Serialize)]
struct CapJson {
    pole: Vec<f64>,
    delta: f64,
    symmetric: bool,
    target_mass: f64,
    image_mass: f64,
    gap: f64,
}

#[derive(Serialize)]
struct ResidualReportJson<'a> {
    max_atom_residual: f64,
    tv_residual: f64,
    worst_cap_gap: f64,
    caps: Vec<CapJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ma_max_abs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ma_residuals: Option<&'a [f64]>,
    warnings: &'a [String],
}

pub fn residual_report_to_json(
    report: &ResidualReport,
    dim: usize,
    warnings: &[String],
) -> Result<Vec<u8>> {
    let caps: Vec<CapJson> = report
        .cap_residuals
        .iter()
        .map(|c| CapJson {
            pole: vec_components(&c.pole, dim),
            delta: c.delta,
            symmetric: c.symmetric,
            target_mass: c.target_mass,
            image_mass: c.image_mass,
            gap: c.gap,
        })
        .collect();
    let worst = caps.iter().map(|c| c.gap).fold(0.0f64, f64::max);
    to_pretty_bytes(&ResidualReportJson {
        max_atom_residual: report.max_atom_residual,
        tv_residual: report.tv_residual,
        worst_cap_gap: worst,
        caps,
        ma_max_abs: report
            .ma_pointwise
            .as_ref()
            .map(|r| r.iter().fold(0.0f64, |a, x| a.max(x.abs()))),
        ma_residuals: report.ma_pointwise.as_deref(),
        warnings,
    })
}

// ---------------------------------------------------------------------
// Geometry exports

/// Wavefront OBJ text for a three-dimensional body.
pub fn body_to_obj(body: &Polytope) -> Result<String> {
    if body.dim != 3 {
        return Err(Error::UnsupportedDim(body.dim));
    }
    let mut out = String::new();
    out.push_str("# convex body export\n");
    for v in &body.vertices {
        out.push_str(&format!("v {} {} {}\n", v.x(), v.y(), v.z()));
    }
    for f in &body.facets {
        out.push('f');
        for idx in &f.vertices {
            out.push_str(&format!(" {}", idx + 1));
        }
        out.push('\n');
    }
    Ok(out)
}

/// CSV boundary loop (`x,y` per line, counterclockwise, closed) for a
/// planar body.
pub fn body_to_csv(body: &Polytope) -> Result<String> {
    if body.dim != 2 {
        return Err(Error::UnsupportedDim(body.dim));
    }
    // Dimension-2 facets are edges [tail, head] in boundary order; chain
    // them starting from facet 0.
    let mut out = String::from("x,y\n");
    let mut order: Vec<usize> = Vec::with_capacity(body.vertices.len() + 1);
    let mut current = body.facets[0].vertices[0];
    order.push(current);
    for _ in 0..body.vertices.len() {
        let next = body
            .facets
            .iter()
            .find(|f| f.vertices[0] == current)
            .map(|f| f.vertices[1]);
        match next {
            Some(n) => {
                order.push(n);
                current = n;
            }
            None => break,
        }
    }
    for idx in &order {
        let v = body.vertices[*idx];
        out.push_str(&format!("{},{}\n", v.x(), v.y()));
    }
    Ok(out)
}

/// CSV of per-direction values over a grid: components of the direction,
/// then one column per named field.
pub fn field_csv(grid: &SphereGrid, columns: &[(&str, &[f64])]) -> Result<String> {
    for (name, values) in columns {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "column {name:?} has {} values on a grid with {} directions",
                values.len(),
                grid.len()
            )));
        }
    }
    let mut out = String::new();
    if grid.dim == 2 {
        out.push_str("ux,uy");
    } else {
        out.push_str("ux,uy,uz");
    }
    for (name, _) in columns {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..grid.len() {
        let d = grid.dirs[i];
        if grid.dim == 2 {
            out.push_str(&format!("{},{}", d.x(), d.y()));
        } else {
            out.push_str(&format!("{},{},{}", d.x(), d.y(), d.z()));
        }
        for (_, values) in columns {
            out.push_str(&format!(",{}", values[i]));
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::RadialField;
    use std::f64::consts::PI;

    #[test]
    fn measures_roundtrip_losslessly() {
        let grid = Arc::new(SphereGrid::build(2, 1).unwrap());
        let atomic = Measure::Atomic(
            AtomicMeasure::new(
                2,
                vec![Vec3::planar(1.0, 0.0), Vec3::planar(0.0, 1.0), Vec3::planar(-1.0, 0.0)],
                vec![PI, 0.5, 2.0],
            )
            .unwrap(),
        );
        let bytes = measure_to_json(&atomic).unwrap();
        let mut warnings = Vec::new();
        let back = measure_from_json(&bytes, &mut warnings).unwrap();
        assert!(warnings.is_empty());
        let (Measure::Atomic(a), Measure::Atomic(b)) = (&atomic, &back) else {
            panic!("kind changed");
        };
        assert_eq!(a.masses, b.masses);
        for (x, y) in a.dirs.iter().zip(&b.dirs) {
            assert!((*x - *y).norm() < 1e-15);
        }

        let density = Measure::Density(
            DensityField::new(grid.clone(), (0..grid.len()).map(|i| 1.0 + i as f64).collect())
                .unwrap(),
        );
        let bytes = measure_to_json(&density).unwrap();
        let back = measure_from_json(&bytes, &mut warnings).unwrap();
        let (Measure::Density(a), Measure::Density(b)) = (&density, &back) else {
            panic!("kind changed");
        };
        assert_eq!(a.values, b.values);
        assert_eq!(b.grid.level, Some(1));

        // Identical input serializes to identical bytes.
        assert_eq!(bytes, measure_to_json(&back).unwrap());
    }

    #[test]
    fn near_unit_directions_are_renormalized_and_bad_input_rejected() {
        let text = r#"{
            "dim": 2, "kind": "atomic",
            "atoms": [
                {"dir": [1.0000001, 0.0], "mass": 1.0},
                {"dir": [0.0, 1.0], "mass": 2.0},
                {"dir": [-1.0, 0.0], "mass": 0.5}
            ]
        }"#;
        let mut warnings = Vec::new();
        let m = measure_from_json(text.as_bytes(), &mut warnings).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("renormalized"));
        let Measure::Atomic(a) = m else { panic!() };
        assert!((a.dirs[0].norm() - 1.0).abs() < 1e-15);

        let far = r#"{"dim": 2, "kind": "atomic",
            "atoms": [{"dir": [1.1, 0.0], "mass": 1.0}]}"#;
        let err = measure_from_json(far.as_bytes(), &mut warnings).unwrap_err();
        assert!(err.to_string().contains("unit sphere"), "{err}");

        let negative = r#"{"dim": 2, "kind": "atomic",
            "atoms": [{"dir": [1.0, 0.0], "mass": -1.0}]}"#;
        let err = measure_from_json(negative.as_bytes(), &mut warnings).unwrap_err();
        assert!(err.to_string().contains("negative mass"), "{err}");

        let unknown = r#"{"dim": 2, "kind": "weird"}"#;
        let err = measure_from_json(unknown.as_bytes(), &mut warnings).unwrap_err();
        assert!(err.to_string().contains("unknown measure kind"), "{err}");
    }

    #[test]
    fn density_on_a_custom_grid_cannot_be_serialized() {
        let grid = Arc::new(
            SphereGrid::from_planar_angles(&[0.0, PI / 2.0, PI, 3.0 * PI / 2.0]).unwrap(),
        );
        let density = Measure::Density(DensityField::lebesgue(grid));
        let err = measure_to_json(&density).unwrap_err();
        assert!(err.to_string().contains("standard grids"), "{err}");
    }

    #[test]
    fn bodies_roundtrip_through_json_obj_and_csv() {
        let grid = Arc::new(SphereGrid::build(3, 1).unwrap());
        let body = RadialField::constant(grid, 2.0)
            .unwrap()
            .hull()
            .unwrap()
            .body;
        let bytes = body_to_json(&body).unwrap();
        let back = body_from_json(&bytes).unwrap();
        assert_eq!(body.vertices.len(), back.vertices.len());
        assert_eq!(body.facets.len(), back.facets.len());
        for v in &body.vertices {
            assert!(back.vertices.iter().any(|w| (*v - *w).norm() < 1e-15));
        }

        let obj = body_to_obj(&body).unwrap();
        assert_eq!(
            obj.lines().filter(|l| l.starts_with("v ")).count(),
            body.vertices.len()
        );
        assert_eq!(
            obj.lines().filter(|l| l.starts_with("f ")).count(),
            body.facets.len()
        );
        assert!(body_to_csv(&body).is_err());

        let square = Polytope::from_points(
            2,
            &[
                Vec3::planar(1.0, 1.0),
                Vec3::planar(-1.0, 1.0),
                Vec3::planar(-1.0, -1.0),
                Vec3::planar(1.0, -1.0),
            ],
        )
        .unwrap();
        let csv = body_to_csv(&square).unwrap();
        // Header plus a closed loop over four corners.
        assert_eq!(csv.lines().count(), 1 + 5);
        assert!(body_to_obj(&square).is_err());
    }

    #[test]
    fn atomic_write_replaces_the_target_in_one_step() {
        let dir = std::env::temp_dir().join(format!("gaussim-io-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        // No stray temp files left behind.
        let leftovers: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn field_csv_lines_up_directions_and_columns() {
        let grid = SphereGrid::build(2, 0).unwrap();
        let radii: Vec<f64> = (0..grid.len()).map(|i| 1.0 + i as f64 * 0.1).collect();
        let csv = field_csv(&grid, &[("radius", &radii)]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("ux,uy,radius"));
        assert_eq!(lines.count(), grid.len());

        let short = vec![1.0; 3];
        assert!(field_csv(&grid, &[("radius", &short)]).is_err());
    }
}
