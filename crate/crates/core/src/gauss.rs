//! The (weighted) Gauss image measure of a convex polytope.
//!
//! For a polytope with the origin inside, every spherical direction whose
//! ray exits through the relative interior of a facet has a unique outward
//! normal there, and the normal directions cluster at vertices: the normal
//! cone of a vertex collects all directions of support planes touching it.
//! Transporting a spherical source measure through this correspondence
//! concentrates it into one atom per vertex — the atom's direction is the
//! radial direction of the vertex and its mass is the source measure of the
//! normal cone. The `p`-weighted variant additionally multiplies each atom
//! by the `p`-th power of the vertex's distance from the origin.
//!
//! The clipped intersections of a cone with the cells of a [`SphereGrid`]
//! ([`RegionPiece`]) are the shared currency of this module and the entropy
//! layer: masses, entropy integrals and gradients all walk the same piece
//! lists, which keeps them mutually consistent to rounding error.

use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::measure::{AtomicMeasure, DensityField};
use crate::par;
use crate::sphere::{self, SphereGrid, SphericalCell};
use crate::vec::Vec3;

/// One piece of a spherical region clipped to a grid cell.
#[derive(Debug, Clone)]
pub struct RegionPiece {
    /// Index of the grid cell the piece lies in.
    pub cell: usize,
    /// Geometry of the intersection.
    pub geom: SphericalCell,
    /// Exact spherical area of the piece.
    pub area: f64,
}

fn rotate_min_first(corners: &mut Vec<Vec3>) {
    let Some((k, _)) = corners.iter().enumerate().min_by(|(_, a), (_, b)| {
        (a.x(), a.y(), a.z())
            .partial_cmp(&(b.x(), b.y(), b.z()))
            .unwrap_or(std::cmp::Ordering::Equal)
    }) else {
        return;
    };
    corners.rotate_left(k);
}

/// Intersect one convex spherical region with every cell of the grid. The
/// pieces partition the region (up to boundary rounding): their areas sum
/// to the region's area.
pub fn region_pieces(region: &SphericalCell, grid: &SphereGrid) -> Vec<RegionPiece> {
    const CLIP_EPS: f64 = 1e-12;
    let mut out = Vec::new();
    match region {
        SphericalCell::Arc { start, width } => {
            for (i, cell) in grid.cells.iter().enumerate() {
                let SphericalCell::Arc {
                    start: cs,
                    width: cw,
                } = cell
                else {
                    continue;
                };
                if let Some((s, w)) = sphere::arc_intersection(*start, *width, *cs, *cw) {
                    if w > 1e-15 {
                        out.push(RegionPiece {
                            cell: i,
                            geom: SphericalCell::Arc { start: s, width: w },
                            area: w,
                        });
                    }
                }
            }
        }
        SphericalCell::Polygon { corners } => {
            // Cap-overlap pruning: the region and a cell can only meet when
            // their bounding caps do.
            let (cap_center, cap_cos) = sphere::bounding_cap(corners);
            let rc = cap_cos.clamp(-1.0, 1.0);
            let rs = (1.0 - rc * rc).max(0.0).sqrt();
            for i in 0..grid.len() {
                let cb = grid.cell_bound_cos(i).clamp(-1.0, 1.0);
                let sb = (1.0 - cb * cb).max(0.0).sqrt();
                // cos(angle between centers) must reach cos(r1 + r2).
                if cap_center.dot(&grid.dirs[i]) < rc * cb - rs * sb - 1e-9 {
                    continue;
                }
                let mut clipped =
                    sphere::clip_polygon_to_cell(corners, &grid.cells[i], CLIP_EPS);
                sphere::dedup_corners(&mut clipped);
                if clipped.len() < 3 {
                    continue;
                }
                let area = sphere::polygon_area(&clipped);
                if area <= 1e-18 {
                    continue;
                }
                rotate_min_first(&mut clipped);
                out.push(RegionPiece {
                    cell: i,
                    geom: SphericalCell::Polygon { corners: clipped },
                    area,
                });
            }
        }
    }
    out
}

/// Clipped pieces of every vertex normal cone, in vertex order.
pub fn body_cone_pieces(
    body: &Polytope,
    grid: &SphereGrid,
) -> Result<Vec<Vec<RegionPiece>>> {
    if body.dim != grid.dim {
        return Err(Error::GridMismatch(format!(
            "body dimension {} vs grid dimension {}",
            body.dim, grid.dim
        )));
    }
    let cones = body.normal_cones()?;
    Ok(par::map_indexed(cones.len(), |v| {
        region_pieces(&cones[v], grid)
    }))
}

/// Mass of a piece list against a per-cell density.
pub fn pieces_mass(pieces: &[RegionPiece], density_values: &[f64]) -> f64 {
    par::sum_compensated(pieces.iter().map(|p| density_values[p.cell] * p.area))
}

/// One atom of a (weighted) Gauss image measure.
#[derive(Debug, Clone)]
pub struct GaussImageEntry {
    /// Index of the vertex carrying the atom.
    pub vertex: usize,
    /// Radial direction of the vertex.
    pub dir: Vec3,
    /// Distance of the vertex from the origin.
    pub radius: f64,
    /// Source measure of the vertex's normal cone.
    pub cone_mass: f64,
    /// Atom mass: `radius^p * cone_mass`.
    pub mass: f64,
}

/// The Gauss image measure of a polytope: one atom per vertex.
#[derive(Debug, Clone)]
pub struct GaussImageMeasure {
    pub dim: usize,
    /// Weight exponent; `0` gives the unweighted measure.
    pub p: f64,
    pub entries: Vec<GaussImageEntry>,
}

impl GaussImageMeasure {
    pub fn total(&self) -> f64 {
        par::sum_compensated(self.entries.iter().map(|e| e.mass))
    }

    /// The measure as a plain atom list.
    pub fn to_atomic(&self) -> Result<AtomicMeasure> {
        AtomicMeasure::new(
            self.dim,
            self.entries.iter().map(|e| e.dir).collect(),
            self.entries.iter().map(|e| e.mass).collect(),
        )
    }
}

/// The `p`-weighted Gauss image measure of `body` under the density
/// `lambda`. Atom masses are `rho^p` times the `lambda`-mass of the
/// vertex's normal cone; `p = 0` recovers the unweighted measure. The
/// source must be a density: transporting an atom list through the normal
/// cones is ambiguous exactly when an atom sits on a cone boundary.
pub fn lp_gauss_image_measure(
    body: &Polytope,
    lambda: &DensityField,
    p: f64,
) -> Result<GaussImageMeasure> {
    if !body.origin_interior() {
        return Err(Error::OriginNotInterior(
            "the Gauss image measure needs the origin strictly inside the body".into(),
        ));
    }
    let pieces = body_cone_pieces(body, &lambda.grid)?;
    let entries = par::map_indexed(body.vertices.len(), |v| {
        let radius = body.vertices[v].norm();
        let cone_mass = pieces_mass(&pieces[v], &lambda.values);
        GaussImageEntry {
            vertex: v,
            dir: body.vertices[v].scale(1.0 / radius),
            radius,
            cone_mass,
            mass: radius.powf(p) * cone_mass,
        }
    });
    Ok(GaussImageMeasure {
        dim: body.dim,
        p,
        entries,
    })
}

/// The unweighted Gauss image measure (the `p = 0` case).
pub fn gauss_image_measure(
    body: &Polytope,
    lambda: &DensityField,
) -> Result<GaussImageMeasure> {
    lp_gauss_image_measure(body, lambda, 0.0)
}

/// For a normal direction `x`, the vertex whose normal cone contains it and
/// that vertex's radial direction. Ties on cone boundaries resolve to the
/// lowest vertex index.
pub fn reverse_radial_gauss(body: &Polytope, x: &Vec3) -> (usize, Vec3) {
    let (v, _) = body.support_argmax(x);
    (v, body.vertices[v].normalized())
}

/// Both sides of the transport identity for a test function `f`:
/// integrating `f` against the Gauss image measure must agree with
/// integrating `f` composed with the reverse radial Gauss map against the
/// source density.
#[derive(Debug, Clone, Copy)]
pub struct PushforwardCheck {
    /// `sum_v f(u_v) * lambda(cone_v)` with exact cone masses.
    pub image_side: f64,
    /// Quadrature of `f(reverse(x))` against the source density.
    pub source_side: f64,
}

impl PushforwardCheck {
    pub fn gap(&self) -> f64 {
        (self.image_side - self.source_side).abs()
    }
}

/// Evaluate the transport identity at the given source-side quadrature
/// refinement. The image side uses exact clipped cone masses, so the gap
/// isolates the source-side quadrature error.
pub fn pushforward_integral<F>(
    body: &Polytope,
    lambda: &DensityField,
    f: F,
    refinement: u32,
) -> Result<PushforwardCheck>
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    let gim = gauss_image_measure(body, lambda)?;
    let image_side = par::sum_compensated(gim.entries.iter().map(|e| e.mass * f(&e.dir)));

    let nodes = sphere::pushforward_nodes(body.dim, refinement)?;
    let grid = &lambda.grid;
    let contributions = par::map_indexed(nodes.len(), |i| {
        let (x, w) = &nodes[i];
        let g = lambda.values[grid.nearest_dir(x)];
        let (_, u) = reverse_radial_gauss(body, x);
        w * g * f(&u)
    });
    let source_side = par::sum_compensated(contributions);
    Ok(PushforwardCheck {
        image_side,
        source_side,
    })
}
