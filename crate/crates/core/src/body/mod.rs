//! Convex polytopes with origin-centered radial structure.
//!
//! Bodies live in dimension 2 (polygons in the z = 0 plane) or dimension 3.
//! A body is stored by its vertices and its facets (outward normal, offset,
//! and a counterclockwise vertex loop). Bodies are built as convex hulls of
//! point clouds — typically radial samples `r_i * u_i` over a sphere grid —
//! or as Wulff shapes of support samples, and support/radial evaluation,
//! polar duality, and scaling combinations are provided on top.

pub mod hull2;
pub mod hull3;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sphere::{self, SphereGrid, SphericalCell};
use crate::vec::Vec3;

#[derive(Debug, Clone)]
pub struct Facet {
    /// Unit outward normal.
    pub normal: Vec3,
    /// Support value of the facet plane: `<normal, x> = offset` on the facet.
    pub offset: f64,
    /// Vertex indices, counterclockwise around `normal` (dimension 3) or the
    /// edge `[tail, head]` in counterclockwise boundary order (dimension 2).
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Polytope {
    pub dim: usize,
    pub vertices: Vec<Vec3>,
    pub facets: Vec<Facet>,
}

impl Polytope {
    /// Convex hull of a point cloud. Points that are not vertices of the
    /// hull are dropped.
    pub fn from_points(dim: usize, points: &[Vec3]) -> Result<Polytope> {
        Self::from_points_mapped(dim, points).map(|(p, _)| p)
    }

    /// Convex hull with the input-to-vertex index map: `map[i]` is the
    /// vertex index of input point `i`, or `None` when the point was
    /// absorbed (not in convex position).
    pub fn from_points_mapped(
        dim: usize,
        points: &[Vec3],
    ) -> Result<(Polytope, Vec<Option<usize>>)> {
        match dim {
            2 => {
                let h = hull2::convex_hull2(points)?;
                let mut map = vec![None; points.len()];
                let vertices: Vec<Vec3> = h
                    .cycle
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| {
                        map[i] = Some(k);
                        points[i]
                    })
                    .collect();
                let m = vertices.len();
                let facets = (0..m)
                    .map(|k| {
                        let a = vertices[k];
                        let b = vertices[(k + 1) % m];
                        let d = b - a;
                        let normal = Vec3::planar(d.y(), -d.x()).normalized();
                        let offset = 0.5 * (normal.dot(&a) + normal.dot(&b));
                        Facet {
                            normal,
                            offset,
                            vertices: vec![k, (k + 1) % m],
                        }
                    })
                    .collect();
                Ok((
                    Polytope {
                        dim,
                        vertices,
                        facets,
                    },
                    map,
                ))
            }
            3 => {
                let h = hull3::convex_hull3(points)?;
                let mut map = vec![None; points.len()];
                let mut vertices = Vec::new();
                let mut keep: Vec<usize> = (0..points.len()).filter(|&i| !h.absorbed[i]).collect();
                keep.sort_unstable();
                for &i in &keep {
                    map[i] = Some(vertices.len());
                    vertices.push(points[i]);
                }
                let facets = h
                    .facets
                    .iter()
                    .map(|f| Facet {
                        normal: f.normal,
                        offset: f.offset,
                        vertices: f.vertices.iter().map(|&i| map[i].unwrap()).collect(),
                    })
                    .collect();
                Ok((
                    Polytope {
                        dim,
                        vertices,
                        facets,
                    },
                    map,
                ))
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    /// Support function `h(u) = max_v <v, u>`.
    pub fn support(&self, u: &Vec3) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for v in &self.vertices {
            best = best.max(v.dot(u));
        }
        best
    }

    /// Support maximizer: the lowest vertex index attaining the maximum,
    /// together with the support value.
    pub fn support_argmax(&self, u: &Vec3) -> (usize, f64) {
        let mut best = 0;
        let mut best_val = self.vertices[0].dot(u);
        for (i, v) in self.vertices.iter().enumerate().skip(1) {
            let val = v.dot(u);
            if val > best_val {
                best_val = val;
                best = i;
            }
        }
        (best, best_val)
    }

    /// Radial function `rho(u) = max {t : t u in K}`; requires the origin
    /// in the interior.
    pub fn radial(&self, u: &Vec3) -> Result<f64> {
        let scale = self.circumradius();
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior(
                "radial function needs the origin strictly inside the body".into(),
            ));
        }
        let mut best = f64::INFINITY;
        for f in &self.facets {
            let den = f.normal.dot(u);
            if den > 1e-14 {
                best = best.min(f.offset / den);
            }
        }
        if !best.is_finite() || best <= 0.0 || best > 1e16 * scale {
            return Err(Error::Degenerate("unbounded radial direction".into()));
        }
        Ok(best)
    }

    pub fn circumradius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max)
    }

    pub fn inradius_from_origin(&self) -> f64 {
        self.facets
            .iter()
            .map(|f| f.offset)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn origin_interior(&self) -> bool {
        let tol = 1e-12 * self.circumradius().max(1e-300);
        self.facets.iter().all(|f| f.offset > tol)
    }

    /// Facet indices incident to each vertex.
    pub fn vertex_facet_incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.facets.iter().enumerate() {
            for &v in &f.vertices {
                inc[v].push(fi);
            }
        }
        inc
    }

    /// Outer normal cone of vertex `i`, as a region of the unit sphere:
    /// an arc between the two adjacent edge normals in dimension 2, the
    /// spherical polygon spanned by the incident facet normals in
    /// dimension 3.
    pub fn normal_cones(&self) -> Result<Vec<SphericalCell>> {
        let m = self.vertices.len();
        match self.dim {
            2 => {
                // facet k is the edge from vertex k to vertex k + 1, so the
                // cone at vertex k runs from edge (k-1) to edge k.
                let mut cones = Vec::with_capacity(m);
                for k in 0..m {
                    let prev = &self.facets[(k + m - 1) % m].normal;
                    let here = &self.facets[k].normal;
                    let start = prev.planar_angle();
                    let width = sphere::wrap_2pi(here.planar_angle() - start);
                    if width <= 0.0 || width >= std::f64::consts::PI {
                        return Err(Error::Degenerate(format!(
                            "vertex {k} has a degenerate normal cone"
                        )));
                    }
                    cones.push(SphericalCell::Arc { start, width });
                }
                Ok(cones)
            }
            3 => {
                let inc = self.vertex_facet_incidence();
                let mut cones = Vec::with_capacity(m);
                for (k, fs) in inc.iter().enumerate() {
                    if fs.len() < 3 {
                        return Err(Error::Degenerate(format!(
                            "vertex {k} has fewer than 3 incident facets"
                        )));
                    }
                    let mut corners: Vec<Vec3> =
                        fs.iter().map(|&fi| self.facets[fi].normal).collect();
                    let hint = self.vertices[k].normalized();
                    sphere::sort_ccw_around(&mut corners, &hint);
                    cones.push(SphericalCell::Polygon { corners });
                }
                Ok(cones)
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    /// Radial projection of each facet: the region of directions whose ray
    /// from the origin leaves the body through that facet. Together the
    /// regions partition the sphere (up to shared boundaries), mirroring
    /// how the normal cones partition it vertex-by-vertex. Requires the
    /// origin strictly inside.
    pub fn facet_radial_regions(&self) -> Result<Vec<SphericalCell>> {
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior(
                "facet radial regions need the origin strictly inside".into(),
            ));
        }
        match self.dim {
            2 => {
                let mut regions = Vec::with_capacity(self.facets.len());
                for (k, f) in self.facets.iter().enumerate() {
                    let a = self.vertices[f.vertices[0]];
                    let b = self.vertices[f.vertices[1]];
                    let start = a.normalized().planar_angle();
                    let width = sphere::wrap_2pi(b.normalized().planar_angle() - start);
                    if width <= 0.0 || width >= std::f64::consts::PI {
                        return Err(Error::Degenerate(format!(
                            "facet {k} has a degenerate radial projection"
                        )));
                    }
                    regions.push(SphericalCell::Arc { start, width });
                }
                Ok(regions)
            }
            3 => {
                let mut regions = Vec::with_capacity(self.facets.len());
                for f in &self.facets {
                    let mut corners: Vec<Vec3> = f
                        .vertices
                        .iter()
                        .map(|&vi| self.vertices[vi].normalized())
                        .collect();
                    sphere::sort_ccw_around(&mut corners, &f.normal);
                    regions.push(SphericalCell::Polygon { corners });
                }
                Ok(regions)
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    /// Polar body `{x : <x, v> <= 1 for all v in K}`. Exact structural
    /// dual: facets become vertices and vertices become facets, so taking
    /// the polar twice reproduces the body up to rounding.
    pub fn polar(&self) -> Result<Polytope> {
        if !self.origin_interior() {
            return Err(Error::OriginNotInterior(
                "polar body needs the origin strictly inside".into(),
            ));
        }
        let verts: Vec<Vec3> = self
            .facets
            .iter()
            .map(|f| f.normal.scale(1.0 / f.offset))
            .collect();
        match self.dim {
            2 => {
                let m = verts.len();
                let facets = (0..m)
                    .map(|k| {
                        let v = &self.vertices[(k + 1) % m];
                        let n = v.norm();
                        Facet {
                            normal: v.scale(1.0 / n),
                            offset: 1.0 / n,
                            vertices: vec![k, (k + 1) % m],
                        }
                    })
                    .collect();
                Ok(Polytope {
                    dim: 2,
                    vertices: verts,
                    facets,
                })
            }
            3 => {
                let inc = self.vertex_facet_incidence();
                let mut facets = Vec::with_capacity(self.vertices.len());
                for (k, fs) in inc.iter().enumerate() {
                    if fs.len() < 3 {
                        return Err(Error::Degenerate(format!(
                            "vertex {k} has fewer than 3 incident facets"
                        )));
                    }
                    let v = &self.vertices[k];
                    let n = v.norm();
                    let mut idxs = fs.clone();
                    sort_indices_ccw(&verts, &mut idxs);
                    facets.push(Facet {
                        normal: v.scale(1.0 / n),
                        offset: 1.0 / n,
                        vertices: idxs,
                    });
                }
                Ok(Polytope {
                    dim: 3,
                    vertices: verts,
                    facets,
                })
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    pub fn translate(&self, t: &Vec3) -> Polytope {
        let vertices: Vec<Vec3> = self.vertices.iter().map(|v| *v + *t).collect();
        let facets = self
            .facets
            .iter()
            .map(|f| Facet {
                normal: f.normal,
                offset: f.offset + f.normal.dot(t),
                vertices: f.vertices.clone(),
            })
            .collect();
        Polytope {
            dim: self.dim,
            vertices,
            facets,
        }
    }

    pub fn scale(&self, c: f64) -> Polytope {
        debug_assert!(c > 0.0);
        Polytope {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v.scale(c)).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    normal: f.normal,
                    offset: f.offset * c,
                    vertices: f.vertices.clone(),
                })
                .collect(),
        }
    }
}

/// Order point indices counterclockwise around the (normalized) mean of the
/// points, viewed from outside the sphere along that mean.
fn sort_indices_ccw(points: &[Vec3], idxs: &mut [usize]) {
    let mut m = Vec3::ZERO;
    for &i in idxs.iter() {
        m += points[i];
    }
    let m = m.normalized();
    let (e1, e2) = m.tangent_basis();
    idxs.sort_by(|&a, &b| {
        let ta = points[a].dot(&e2).atan2(points[a].dot(&e1));
        let tb = points[b].dot(&e2).atan2(points[b].dot(&e1));
        ta.total_cmp(&tb)
    });
}

/// Positive radial samples over a sphere grid: the discrete stand-in for a
/// star-shaped body `{t u : 0 <= t <= r(u)}`.
#[derive(Debug, Clone)]
pub struct RadialField {
    pub grid: Arc<SphereGrid>,
    pub values: Vec<f64>,
}

/// Convex hull of a radial field, with the grid-to-vertex correspondence.
#[derive(Debug)]
pub struct RadialHull {
    pub body: Polytope,
    /// `vertex_of_sample[i]` is the body vertex realizing sample `i`, or
    /// `None` when `r_i u_i` fell inside the hull of the other samples.
    pub vertex_of_sample: Vec<Option<usize>>,
    /// Grid index of each body vertex.
    pub sample_of_vertex: Vec<usize>,
}

impl RadialField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<RadialField> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} radial values on a grid of {} directions",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|&r| r.is_finite() && r > 0.0) {
            return Err(Error::Domain("radial values must be positive".into()));
        }
        Ok(RadialField { grid, values })
    }

    pub fn constant(grid: Arc<SphereGrid>, r: f64) -> Result<RadialField> {
        let n = grid.len();
        RadialField::new(grid, vec![r; n])
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn hull(&self) -> Result<RadialHull> {
        let points: Vec<Vec3> = self
            .grid
            .dirs
            .iter()
            .zip(&self.values)
            .map(|(u, &r)| u.scale(r))
            .collect();
        let (body, vertex_of_sample) = Polytope::from_points_mapped(self.grid.dim, &points)?;
        let mut sample_of_vertex = vec![usize::MAX; body.vertices.len()];
        for (i, m) in vertex_of_sample.iter().enumerate() {
            if let Some(v) = *m {
                sample_of_vertex[v] = i;
            }
        }
        if !body.origin_interior() {
            return Err(Error::OriginNotInterior(
                "radial hull does not enclose the origin".into(),
            ));
        }
        Ok(RadialHull {
            body,
            vertex_of_sample,
            sample_of_vertex,
        })
    }
}

/// Positive support samples over a sphere grid.
#[derive(Debug, Clone)]
pub struct SupportField {
    pub grid: Arc<SphereGrid>,
    pub values: Vec<f64>,
}

impl SupportField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<SupportField> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} support values on a grid of {} directions",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|&h| h.is_finite() && h > 0.0) {
            return Err(Error::Domain("support values must be positive".into()));
        }
        Ok(SupportField { grid, values })
    }

    /// Sample the support function of a body on the grid.
    pub fn of_body(grid: Arc<SphereGrid>, body: &Polytope) -> Result<SupportField> {
        let values: Vec<f64> = grid.dirs.iter().map(|u| body.support(u)).collect();
        SupportField::new(grid, values)
    }

    /// The largest body with these support bounds:
    /// `{x : <x, u_i> <= h_i for all i}`, realized as the polar of the hull
    /// of the reciprocal radial field.
    pub fn wulff(&self) -> Result<Polytope> {
        let recip: Vec<f64> = self.values.iter().map(|&h| 1.0 / h).collect();
        let inverse = RadialField::new(self.grid.clone(), recip)?;
        inverse.hull()?.body.polar()
    }
}

/// Support-sum combination sampled on a grid: `(a h1^p + b h2^p)^(1/p)`
/// for `p != 0`, the geometric mean form `h1^a h2^b` at `p = 0`.
pub fn lp_support_combination(
    p: f64,
    a: f64,
    k1: &Polytope,
    b: f64,
    k2: &Polytope,
    grid: &Arc<SphereGrid>,
) -> Result<SupportField> {
    if a < 0.0 || b < 0.0 || (a == 0.0 && b == 0.0) {
        return Err(Error::Domain(
            "combination weights must be nonnegative and not both zero".into(),
        ));
    }
    let values: Vec<f64> = grid
        .dirs
        .iter()
        .map(|u| {
            let h1 = k1.support(u);
            let h2 = k2.support(u);
            if p == 0.0 {
                h1.powf(a) * h2.powf(b)
            } else {
                (a * h1.powf(p) + b * h2.powf(p)).powf(1.0 / p)
            }
        })
        .collect();
    SupportField::new(grid.clone(), values)
}

/// Radial harmonic combination sampled on a grid:
/// `rho = (rho1^(-p) + t rho2^(-p))^(-1/p)` for `p != 0`, and the
/// geometric interpolation `rho1 * rho2^t` at `p = 0` (the limit family).
/// Negative `t` is allowed as long as every combined value stays positive,
/// so the family can be probed on both sides of `t = 0`.
pub fn lp_harmonic_combination(
    p: f64,
    k1: &Polytope,
    t: f64,
    k2: &Polytope,
    grid: &Arc<SphereGrid>,
) -> Result<RadialField> {
    let values: Vec<f64> = grid
        .dirs
        .iter()
        .map(|u| {
            let r1 = k1.radial(u)?;
            let r2 = k2.radial(u)?;
            let v = if p == 0.0 {
                r1 * r2.powf(t)
            } else {
                let s = r1.powf(-p) + t * r2.powf(-p);
                if s <= 0.0 {
                    return Err(Error::Domain(format!(
                        "harmonic combination leaves the positive cone at t = {t}"
                    )));
                }
                s.powf(-1.0 / p)
            };
            Ok(v)
        })
        .collect::<Result<_>>()?;
    RadialField::new(grid.clone(), values)
}

/// Largest support-function deviation over the given directions plus both
/// bodies' vertex directions. For convex bodies this sampled sup-norm
/// approaches the Hausdorff distance as the direction set refines.
pub fn hausdorff_distance(k1: &Polytope, k2: &Polytope, dirs: &[Vec3]) -> f64 {
    let mut best = 0.0f64;
    let mut probe = |u: &Vec3| {
        let d = (k1.support(u) - k2.support(u)).abs();
        if d > best {
            best = d;
        }
    };
    for u in dirs {
        probe(u);
    }
    for v in k1.vertices.iter().chain(k2.vertices.iter()) {
        let n = v.norm();
        if n > 0.0 {
            probe(&v.scale(1.0 / n));
        }
    }
    best
}
