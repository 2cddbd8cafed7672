//! Spherical grids and geometry on the unit sphere.
//!
//! A grid is a finite set of unit directions together with their spherical
//! Voronoi cells. In dimension 2 the "sphere" is the unit circle, directions
//! are equally spaced angles and cells are arcs; in dimension 3 directions
//! come from a subdivided icosahedron and cells are convex spherical
//! polygons. Cells of a dimension-3 grid are computed as the normal cones of
//! the convex hull of the direction set, which is exactly the spherical
//! Voronoi diagram (corners are circumcenters of the Delaunay triangles).

use crate::body::hull3;
use crate::error::{Error, Result};
use crate::vec::Vec3;

pub const TAU: f64 = std::f64::consts::TAU;

/// Hard caps on grid resolution. Dimension-3 grids above level 5 are
/// rejected; quadrature node generation (which needs no Voronoi structure)
/// can go finer, see [`pushforward_nodes`].
pub const MAX_LEVEL_DIM2: u32 = 14;
pub const MAX_LEVEL_DIM3: u32 = 5;

/// Tolerance for antipodal pairing and boundary membership.
pub const PAIR_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum SphericalCell {
    /// Circular arc `[start, start + width)`, radians, `0 < width < pi`.
    Arc { start: f64, width: f64 },
    /// Convex spherical polygon, corners ordered counterclockwise as seen
    /// from outside the sphere; contained in an open hemisphere.
    Polygon { corners: Vec<Vec3> },
}

impl SphericalCell {
    pub fn area(&self) -> f64 {
        match self {
            SphericalCell::Arc { width, .. } => *width,
            SphericalCell::Polygon { corners } => polygon_area(corners),
        }
    }

    pub fn contains(&self, u: &Vec3) -> bool {
        match self {
            SphericalCell::Arc { start, width } => {
                wrap_2pi(u.planar_angle() - start) <= *width + PAIR_TOL
            }
            SphericalCell::Polygon { corners } => {
                let k = corners.len();
                (0..k).all(|i| {
                    let n = corners[i].cross(&corners[(i + 1) % k]);
                    n.dot(u) >= -PAIR_TOL * n.norm().max(1e-300)
                })
            }
        }
    }
}

/// Spherical cap `{u : <u, center> >= delta}`; the symmetric variant keeps
/// `|<u, center>| >= delta` instead.
#[derive(Debug, Clone, Copy)]
pub struct Cap {
    pub center: Vec3,
    pub delta: f64,
    pub symmetric: bool,
}

impl Cap {
    pub fn contains(&self, u: &Vec3) -> bool {
        let d = self.center.dot(u);
        if self.symmetric {
            d.abs() >= self.delta
        } else {
            d >= self.delta
        }
    }
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub dim: usize,
    /// Canonical refinement level; `None` for grids built from explicit
    /// direction sets.
    pub level: Option<u32>,
    pub dirs: Vec<Vec3>,
    pub cells: Vec<SphericalCell>,
    pub areas: Vec<f64>,
    /// Index of the antipodal direction of each direction, when the set is
    /// closed under negation.
    pub antipode: Option<Vec<usize>>,
    /// cos of the angular radius of a cap around `dirs[i]` covering cell i.
    bound_cos: Vec<f64>,
}

impl SphereGrid {
    /// Canonical grid: `8 * 2^level` equally spaced directions in dimension
    /// 2, a `level`-times subdivided icosahedron in dimension 3.
    pub fn build(dim: usize, level: u32) -> Result<SphereGrid> {
        match dim {
            2 => {
                if level > MAX_LEVEL_DIM2 {
                    return Err(Error::LevelOutOfRange {
                        dim,
                        level,
                        max: MAX_LEVEL_DIM2,
                    });
                }
                let n = 8usize << level;
                let half = n / 2;
                let mut dirs = Vec::with_capacity(n);
                for k in 0..half {
                    let t = TAU * k as f64 / n as f64;
                    dirs.push(Vec3::planar(t.cos(), t.sin()));
                }
                // Exact negation keeps the antipodal pairing bit-precise.
                for k in 0..half {
                    dirs.push(-dirs[k]);
                }
                let width = TAU / n as f64;
                let cells: Vec<SphericalCell> = (0..n)
                    .map(|k| SphericalCell::Arc {
                        start: width * (k as f64 - 0.5),
                        width,
                    })
                    .collect();
                let areas = vec![width; n];
                let antipode = (0..n).map(|k| (k + half) % n).collect();
                let bound_cos = vec![(width / 2.0).cos(); n];
                Ok(SphereGrid {
                    dim,
                    level: Some(level),
                    dirs,
                    cells,
                    areas,
                    antipode: Some(antipode),
                    bound_cos,
                })
            }
            3 => {
                if level > MAX_LEVEL_DIM3 {
                    return Err(Error::LevelOutOfRange {
                        dim,
                        level,
                        max: MAX_LEVEL_DIM3,
                    });
                }
                let dirs = icosphere_dirs(level);
                let mut grid = SphereGrid::from_dirs3(dirs)?;
                grid.level = Some(level);
                Ok(grid)
            }
            d => Err(Error::UnsupportedDim(d)),
        }
    }

    /// Custom planar grid from strictly increasing angles in `[0, 2pi)`.
    pub fn from_planar_angles(angles: &[f64]) -> Result<SphereGrid> {
        let n = angles.len();
        if n < 3 {
            return Err(Error::Degenerate(
                "planar grid needs at least 3 directions".into(),
            ));
        }
        for w in angles.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain(
                    "grid angles must be strictly increasing".into(),
                ));
            }
        }
        if angles[0] < 0.0 || *angles.last().unwrap() >= TAU {
            return Err(Error::Domain("grid angles must lie in [0, 2pi)".into()));
        }
        let dirs: Vec<Vec3> = angles
            .iter()
            .map(|&t| Vec3::planar(t.cos(), t.sin()))
            .collect();
        let mut cells = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        for k in 0..n {
            let prev = angles[(k + n - 1) % n];
            let next = angles[(k + 1) % n];
            let lo = angles[k] - wrap_2pi(angles[k] - prev) / 2.0;
            let width = wrap_2pi(angles[k] - prev) / 2.0 + wrap_2pi(next - angles[k]) / 2.0;
            if width >= std::f64::consts::PI {
                return Err(Error::Degenerate(
                    "a Voronoi cell spans half the circle; grid too sparse".into(),
                ));
            }
            cells.push(SphericalCell::Arc { start: lo, width });
            areas.push(width);
        }
        let bound_cos = cells
            .iter()
            .map(|c| match c {
                SphericalCell::Arc { width, .. } => (width / 2.0).cos(),
                _ => unreachable!(),
            })
            .collect();
        let antipode = pair_antipodes(&dirs);
        Ok(SphereGrid {
            dim: 2,
            level: None,
            dirs,
            cells,
            areas,
            antipode,
            bound_cos,
        })
    }

    /// Custom spatial grid from explicit unit directions in convex position.
    pub fn from_dirs3(dirs: Vec<Vec3>) -> Result<SphereGrid> {
        for d in &dirs {
            if !d.is_finite() || (d.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Domain("grid directions must be unit vectors".into()));
            }
        }
        let hull = hull3::convex_hull3(&dirs)?;
        if hull.absorbed.iter().any(|&a| a) {
            return Err(Error::Degenerate(
                "grid directions must be distinct and in convex position".into(),
            ));
        }
        let n = dirs.len();
        // Normal cones of the hull of unit points are the Voronoi cells:
        // corners are the (unit) facet normals of incident triangles, i.e.
        // the circumcenters of the Delaunay triangles.
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, tri) in hull.tris.iter().enumerate() {
            for &v in &tri.v {
                incident[v].push(t);
            }
        }
        let mut cells = Vec::with_capacity(n);
        let mut areas = Vec::with_capacity(n);
        let mut bound_cos = Vec::with_capacity(n);
        for i in 0..n {
            let mut corners: Vec<Vec3> = incident[i].iter().map(|&t| hull.tris[t].n).collect();
            if corners.len() < 3 {
                return Err(Error::Degenerate(format!(
                    "direction {i} has a degenerate Voronoi cell"
                )));
            }
            sort_ccw_around(&mut corners, &dirs[i]);
            dedup_corners(&mut corners);
            if corners.len() < 3 {
                return Err(Error::Degenerate(format!(
                    "direction {i} has a degenerate Voronoi cell"
                )));
            }
            let area = polygon_area(&corners);
            let bc = corners
                .iter()
                .map(|c| c.dot(&dirs[i]))
                .fold(f64::INFINITY, f64::min);
            cells.push(SphericalCell::Polygon { corners });
            areas.push(area);
            bound_cos.push(bc);
        }
        let antipode = pair_antipodes(&dirs);
        Ok(SphereGrid {
            dim: 3,
            level: None,
            dirs,
            cells,
            areas,
            antipode,
            bound_cos,
        })
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Index of the direction nearest to `u` (= the Voronoi cell containing
    /// `u`). Constant-time for canonical planar grids.
    pub fn nearest_dir(&self, u: &Vec3) -> usize {
        let n = self.len();
        if self.dim == 2 {
            if let Some(level) = self.level {
                let _ = level;
                let t = wrap_2pi(u.planar_angle());
                let k = (t / (TAU / n as f64)).round() as usize;
                return k % n;
            }
        }
        let mut best = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, d) in self.dirs.iter().enumerate() {
            let dot = d.dot(u);
            if dot > best_dot {
                best_dot = dot;
                best = i;
            }
        }
        best
    }

    /// cos of the angular radius of cell `i` around `dirs[i]`.
    pub fn cell_bound_cos(&self, i: usize) -> f64 {
        self.bound_cos[i]
    }

    pub fn antipode_of(&self, i: usize) -> Option<usize> {
        self.antipode.as_ref().map(|a| a[i])
    }

    /// Directions of the grid lying in the cap.
    pub fn dirs_in_cap(&self, cap: &Cap) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| cap.contains(&self.dirs[i]))
            .collect()
    }
}

fn pair_antipodes(dirs: &[Vec3]) -> Option<Vec<usize>> {
    let n = dirs.len();
    let mut map = vec![usize::MAX; n];
    for i in 0..n {
        let neg = -dirs[i];
        let mut found = usize::MAX;
        for (j, d) in dirs.iter().enumerate() {
            if (*d - neg).norm() <= PAIR_TOL {
                found = j;
                break;
            }
        }
        if found == usize::MAX {
            return None;
        }
        map[i] = found;
    }
    Some(map)
}

/// Wrap an angle into `[0, 2pi)`.
pub fn wrap_2pi(x: f64) -> f64 {
    let mut t = x % TAU;
    if t < 0.0 {
        t += TAU;
    }
    t
}

/// Intersection of two circular arcs, each of width < pi. At most one
/// component under that width bound. Returns `(start, width)` of the overlap
/// when nonempty.
pub fn arc_intersection(s1: f64, w1: f64, s2: f64, w2: f64) -> Option<(f64, f64)> {
    // Work in coordinates relative to s1: arc1 = [0, w1].
    let d = wrap_2pi(s2 - s1);
    for shift in [d, d - TAU] {
        let lo = shift.max(0.0);
        let hi = (shift + w2).min(w1);
        if hi > lo {
            return Some((s1 + lo, hi - lo));
        }
    }
    None
}

// ----- spherical polygons -----

/// Signed spherical excess (area) of the geodesic triangle (a, b, c);
/// positive when the vertices run counterclockwise seen from outside.
pub fn triangle_excess(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Area of a convex spherical polygon with counterclockwise corners.
pub fn polygon_area(corners: &[Vec3]) -> f64 {
    if corners.len() < 3 {
        return 0.0;
    }
    let mut total = 0.0;
    for k in 1..corners.len() - 1 {
        total += triangle_excess(&corners[0], &corners[k], &corners[k + 1]);
    }
    total
}

/// Clip a convex spherical polygon by the half-space `<x, n> >= 0`
/// (great-circle boundary). Points within `eps` of the boundary count as
/// inside, so clipping a polygon by its own edges is the identity.
pub fn clip_polygon_to_halfspace(poly: &[Vec3], n: &Vec3, eps: f64) -> Vec<Vec3> {
    let k = poly.len();
    if k == 0 {
        return Vec::new();
    }
    let s: Vec<f64> = poly.iter().map(|p| p.dot(n)).collect();
    let inside: Vec<bool> = s.iter().map(|&v| v >= -eps).collect();
    let mut out = Vec::with_capacity(k + 2);
    for i in 0..k {
        let j = (i + 1) % k;
        if inside[i] {
            out.push(poly[i]);
        }
        if inside[i] != inside[j] {
            // The chordal crossing point lies in span(poly[i], poly[j]) and
            // on the clipping plane; normalizing projects it to the sphere.
            let t = s[j] - s[i];
            let x = poly[i].scale(s[j] / t) - poly[j].scale(s[i] / t);
            out.push(x.normalized());
        }
    }
    out
}

/// Clip a convex spherical polygon to a grid cell. Returns the (possibly
/// empty) intersection polygon.
pub fn clip_polygon_to_cell(poly: &[Vec3], cell: &SphericalCell, eps: f64) -> Vec<Vec3> {
    match cell {
        SphericalCell::Polygon { corners } => {
            let k = corners.len();
            let mut cur = poly.to_vec();
            for i in 0..k {
                if cur.len() < 3 {
                    return Vec::new();
                }
                let n = corners[i].cross(&corners[(i + 1) % k]);
                let nn = n.norm();
                if nn < 1e-15 {
                    continue;
                }
                cur = clip_polygon_to_halfspace(&cur, &n.scale(1.0 / nn), eps);
            }
            if cur.len() < 3 {
                Vec::new()
            } else {
                cur
            }
        }
        SphericalCell::Arc { .. } => unreachable!("arc cells are planar"),
    }
}

/// Sort corner directions counterclockwise (seen from outside) around an
/// interior direction of the cone they span.
pub fn sort_ccw_around(corners: &mut [Vec3], interior_hint: &Vec3) {
    // The mean of the corners is a positive combination of the cone's
    // extreme rays, hence interior whenever the hint is; prefer it because
    // the hint may sit close to (or outside) the boundary.
    let mut m = Vec3::ZERO;
    for c in corners.iter() {
        m += *c;
    }
    let m = if m.norm() > 1e-12 {
        m.normalized()
    } else {
        *interior_hint
    };
    let (e1, e2) = m.tangent_basis();
    corners.sort_by(|a, b| {
        let ta = a.dot(&e2).atan2(a.dot(&e1));
        let tb = b.dot(&e2).atan2(b.dot(&e1));
        ta.total_cmp(&tb)
    });
}

/// Drop near-duplicate corners (tolerance 1e-10), keeping first occurrences.
pub fn dedup_corners(corners: &mut Vec<Vec3>) {
    let tol = 1e-10;
    let mut out: Vec<Vec3> = Vec::with_capacity(corners.len());
    for c in corners.iter() {
        if out.iter().all(|o| (*o - *c).norm() > tol) {
            out.push(*c);
        }
    }
    *corners = out;
}

/// Recursive quadrature of `f` over the geodesic triangle (a, b, c):
/// `depth` rounds of 4-way subdivision, centroid rule on each leaf with the
/// leaf's own spherical excess as weight (hence exact for constants).
pub fn triangle_quad<F: Fn(&Vec3) -> f64>(
    a: &Vec3,
    b: &Vec3,
    c: &Vec3,
    depth: u32,
    f: &F,
) -> f64 {
    if depth == 0 {
        let w = triangle_excess(a, b, c);
        let node = (*a + *b + *c).normalized();
        return w * f(&node);
    }
    let ab = (*a + *b).normalized();
    let bc = (*b + *c).normalized();
    let ca = (*c + *a).normalized();
    triangle_quad(a, &ab, &ca, depth - 1, f)
        + triangle_quad(&ab, b, &bc, depth - 1, f)
        + triangle_quad(&ca, &bc, c, depth - 1, f)
        + triangle_quad(&ab, &bc, &ca, depth - 1, f)
}

/// Quadrature of `f` over a convex spherical polygon: fan triangulation from
/// the first corner, then [`triangle_quad`] on each triangle.
pub fn polygon_quad<F: Fn(&Vec3) -> f64>(corners: &[Vec3], depth: u32, f: &F) -> f64 {
    let mut total = 0.0;
    for k in 1..corners.len().saturating_sub(1) {
        total += triangle_quad(&corners[0], &corners[k], &corners[k + 1], depth, f);
    }
    total
}

// Degree-5 symmetric 7-point rule on a planar triangle, in barycentric
// coordinates with weights summing to 1.
const DEG5_NODES: [([f64; 3], f64); 7] = {
    // sqrt(15) to full precision; the node/weight pairs are the classic
    // Radon rule.
    const S: f64 = 3.872983346207417;
    const A1: f64 = (6.0 - S) / 21.0;
    const A2: f64 = (6.0 + S) / 21.0;
    const W1: f64 = (155.0 - S) / 1200.0;
    const W2: f64 = (155.0 + S) / 1200.0;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 9.0 / 40.0),
        ([A1, A1, 1.0 - 2.0 * A1], W1),
        ([A1, 1.0 - 2.0 * A1, A1], W1),
        ([1.0 - 2.0 * A1, A1, A1], W1),
        ([A2, A2, 1.0 - 2.0 * A2], W2),
        ([A2, 1.0 - 2.0 * A2, A2], W2),
        ([1.0 - 2.0 * A2, A2, A2], W2),
    ]
};

fn proj_accumulate<F: Fn(&Vec3) -> f64>(
    a: &Vec3,
    b: &Vec3,
    c: &Vec3,
    d_plane: f64,
    depth: u32,
    f: &F,
    raw: &mut f64,
    wsum: &mut f64,
) {
    if depth > 0 {
        let ab = (*a + *b).scale(0.5);
        let bc = (*b + *c).scale(0.5);
        let ca = (*c + *a).scale(0.5);
        proj_accumulate(a, &ab, &ca, d_plane, depth - 1, f, raw, wsum);
        proj_accumulate(&ab, b, &bc, d_plane, depth - 1, f, raw, wsum);
        proj_accumulate(&ca, &bc, c, d_plane, depth - 1, f, raw, wsum);
        proj_accumulate(&ab, &bc, &ca, d_plane, depth - 1, f, raw, wsum);
        return;
    }
    let area2 = (*b - *a).cross(&(*c - *a)).norm();
    if area2 <= 1e-300 {
        return;
    }
    let area = 0.5 * area2;
    for (bary, w) in DEG5_NODES.iter() {
        let y = a.scale(bary[0]) + b.scale(bary[1]) + c.scale(bary[2]);
        let ny = y.norm();
        let wt = w * area * d_plane / (ny * ny * ny);
        *raw += wt * f(&y.scale(1.0 / ny));
        *wsum += wt;
    }
}

/// Quadrature of `f` over the geodesic triangle (a, b, c) by radial
/// projection: the chord triangle is subdivided `depth` times, a degree-5
/// rule is applied on each planar piece, and the planar measure is carried
/// to the sphere through `d_plane / |y|^3`. The result is rescaled so that
/// constants integrate to the exact spherical excess, which downstream
/// identities (scale invariance of the objective, zero at constant fields)
/// lean on.
pub fn triangle_quad_proj<F: Fn(&Vec3) -> f64>(
    a: &Vec3,
    b: &Vec3,
    c: &Vec3,
    depth: u32,
    f: &F,
) -> f64 {
    let excess = triangle_excess(a, b, c);
    let n = (*b - *a).cross(&(*c - *a));
    let nn = n.norm();
    if nn <= 1e-300 || excess == 0.0 {
        // Chord triangle collapsed; the spherical area is negligible too.
        return excess * f(&(*a + *b + *c).normalized());
    }
    let d_plane = n.scale(1.0 / nn).dot(a);
    if d_plane.abs() <= 1e-12 {
        // Plane through the origin: the "triangle" spans a half great
        // circle; no valid cell or cone piece does, so treat as empty.
        return 0.0;
    }
    let (mut raw, mut wsum) = (0.0, 0.0);
    proj_accumulate(a, b, c, d_plane, depth, f, &mut raw, &mut wsum);
    if wsum.abs() <= 1e-300 {
        return excess * f(&(*a + *b + *c).normalized());
    }
    excess * raw / wsum
}

/// [`triangle_quad_proj`] over a convex spherical polygon. Quadrilaterals
/// and larger fan from the normalized corner mean, so the value does not
/// depend on which corner the list happens to start at (fanning from a
/// corner would swap in a different triangulation, and with it a different
/// sample of the rule's error, whenever rounding reorders two
/// lexicographically close corners).
pub fn polygon_quad_proj<F: Fn(&Vec3) -> f64>(corners: &[Vec3], depth: u32, f: &F) -> f64 {
    let n = corners.len();
    if n < 3 {
        return 0.0;
    }
    if n == 3 {
        return triangle_quad_proj(&corners[0], &corners[1], &corners[2], depth, f);
    }
    let mut m = Vec3::ZERO;
    for c in corners {
        m += *c;
    }
    if m.norm() <= 1e-12 {
        // Corners spread over a near-great circle; fall back to a corner fan.
        let mut total = 0.0;
        for k in 1..n - 1 {
            total += triangle_quad_proj(&corners[0], &corners[k], &corners[k + 1], depth, f);
        }
        return total;
    }
    let center = m.normalized();
    let mut total = 0.0;
    for k in 0..n {
        total += triangle_quad_proj(&center, &corners[k], &corners[(k + 1) % n], depth, f);
    }
    total
}

/// Smallest observed spherical cap around the normalized mean of `points`:
/// returns the center and the cosine of the angular radius. Used to prune
/// region-intersection work before running the exact clipper.
pub fn bounding_cap(points: &[Vec3]) -> (Vec3, f64) {
    let mut m = Vec3::ZERO;
    for p in points {
        m += *p;
    }
    let center = if m.norm() > 1e-12 {
        m.normalized()
    } else if let Some(p) = points.first() {
        *p
    } else {
        return (Vec3::new(0.0, 0.0, 1.0), 1.0);
    };
    let mut cos_r = 1.0f64;
    for p in points {
        cos_r = cos_r.min(center.dot(p));
    }
    (center, cos_r)
}

/// Gauss-Legendre 3-node quadrature of `f(angle)` over `[start, start+width]`
/// split into equal pieces of width at most `max_piece`. Weights per piece
/// sum to the piece length exactly up to rounding (exact for constants).
pub fn arc_quad<F: Fn(f64) -> f64>(start: f64, width: f64, max_piece: f64, f: &F) -> f64 {
    const T: f64 = 0.7745966692414834; // sqrt(3/5)
    const W0: f64 = 5.0 / 9.0;
    const W1: f64 = 8.0 / 9.0;
    let pieces = (width / max_piece).ceil().max(1.0) as usize;
    let w = width / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let mid = start + w * (k as f64 + 0.5);
        let h = w / 2.0;
        total += h * (W0 * f(mid - h * T) + W1 * f(mid) + W0 * f(mid + h * T));
    }
    total
}

// ----- icosphere -----

/// Unit directions of a `level`-times subdivided icosahedron
/// (`10 * 4^level + 2` of them). The set is exactly closed under negation.
pub fn icosphere_dirs(level: u32) -> Vec<Vec3> {
    icosphere_mesh(level).0
}

/// Vertices and triangles of the subdivided icosahedron, projected to the
/// sphere. Triangles are consistently outward-oriented.
pub fn icosphere_mesh(level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let s = 1.0 / (1.0 + phi * phi).sqrt();
    let a = s;
    let b = phi * s;
    // Antipodally symmetric vertex set: cyclic shifts of (0, ±a, ±b).
    let mut verts = vec![
        Vec3::new(0.0, a, b),
        Vec3::new(0.0, a, -b),
        Vec3::new(b, 0.0, a),
        Vec3::new(-b, 0.0, a),
        Vec3::new(a, b, 0.0),
        Vec3::new(-a, b, 0.0),
    ];
    for i in 0..6 {
        verts.push(-verts[i]);
    }
    // Faces: triples of mutually nearest vertices (edge length = 2a),
    // oriented outward.
    let mut faces = Vec::with_capacity(20);
    let edge_sq = {
        let mut best = f64::INFINITY;
        for i in 1..12 {
            best = best.min((verts[i] - verts[0]).norm_sq());
        }
        best
    };
    for i in 0..12 {
        for j in i + 1..12 {
            if ((verts[j] - verts[i]).norm_sq() - edge_sq).abs() > 1e-9 {
                continue;
            }
            for k in j + 1..12 {
                if ((verts[k] - verts[i]).norm_sq() - edge_sq).abs() > 1e-9
                    || ((verts[k] - verts[j]).norm_sq() - edge_sq).abs() > 1e-9
                {
                    continue;
                }
                let n = (verts[j] - verts[i]).cross(&(verts[k] - verts[i]));
                if n.dot(&verts[i]) > 0.0 {
                    faces.push([i, j, k]);
                } else {
                    faces.push([i, k, j]);
                }
            }
        }
    }
    debug_assert_eq!(faces.len(), 20);

    for _ in 0..level {
        let mut midpoint = std::collections::HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0usize; 3];
            for e in 0..3 {
                let (u, v) = (f[e], f[(e + 1) % 3]);
                let key = (u.min(v), u.max(v));
                mids[e] = *midpoint.entry(key).or_insert_with(|| {
                    verts.push((verts[u] + verts[v]).normalized());
                    verts.len() - 1
                });
            }
            new_faces.push([f[0], mids[0], mids[2]]);
            new_faces.push([f[1], mids[1], mids[0]]);
            new_faces.push([f[2], mids[2], mids[1]]);
            new_faces.push([mids[0], mids[1], mids[2]]);
        }
        faces = new_faces;
    }
    (verts, faces)
}

/// Quadrature node/weight pairs covering the whole sphere (circle), for the
/// sampling side of pushforward checks. `refinement` shifts a fixed base
/// resolution: dimension 2 uses `8 * 2^(8+r)` midpoint nodes offset by half
/// a step (so canonical cell boundaries never hit a node), dimension 3 uses
/// centroids of the icosahedron subdivided `3 + r` times with spherical
/// triangle areas as weights.
pub fn pushforward_nodes(dim: usize, refinement: u32) -> Result<Vec<(Vec3, f64)>> {
    match dim {
        2 => {
            let level = 8 + refinement;
            if level > 16 {
                return Err(Error::LevelOutOfRange {
                    dim,
                    level: refinement,
                    max: 8,
                });
            }
            let n = 8usize << level;
            let w = TAU / n as f64;
            Ok((0..n)
                .map(|k| {
                    let t = w * (k as f64 + 0.5);
                    (Vec3::planar(t.cos(), t.sin()), w)
                })
                .collect())
        }
        3 => {
            let depth = 3 + refinement;
            if depth > 8 {
                return Err(Error::LevelOutOfRange {
                    dim,
                    level: refinement,
                    max: 5,
                });
            }
            let (verts, faces) = icosphere_mesh(depth);
            Ok(faces
                .iter()
                .map(|f| {
                    let (a, b, c) = (&verts[f[0]], &verts[f[1]], &verts[f[2]]);
                    let node = (*a + *b + *c).normalized();
                    (node, triangle_excess(a, b, c))
                })
                .collect())
        }
        d => Err(Error::UnsupportedDim(d)),
    }
}
