//! Incremental convex hull of a 3D point set.
//!
//! Randomized incremental construction with conflict tracking. Faces are
//! kept as outward-oriented triangles; a post-pass merges coplanar triangles
//! into polygonal facets and demotes input points that end up in the
//! relative interior of a facet or an edge (they are reported as absorbed
//! rather than listed as hull vertices).
//!
//! Near-degenerate orientation decisions (a point within `~1e-12 * scale`
//! of a face plane) are re-evaluated in double-double arithmetic directly
//! from the point coordinates, so exactly-on-facet samples are absorbed
//! instead of sprouting sliver faces.

use std::collections::HashMap;

use crate::dd::{self, Dd};
use crate::error::{Error, Result};
use crate::vec::Vec3;

#[derive(Debug, Clone)]
pub struct Tri {
    /// Input point indices, counterclockwise from outside.
    pub v: [usize; 3],
    /// Unit outward normal.
    pub n: Vec3,
    /// Plane offset: `<n, x> = d` on the face plane.
    pub d: f64,
}

#[derive(Debug, Clone)]
pub struct FacetLoop {
    pub normal: Vec3,
    pub offset: f64,
    /// Input point indices, counterclockwise around `normal`; collinear
    /// in-edge points are pruned.
    pub vertices: Vec<usize>,
}

#[derive(Debug)]
pub struct Hull3 {
    /// Triangulated surface (outward orientation).
    pub tris: Vec<Tri>,
    /// Coplanar-merged facets.
    pub facets: Vec<FacetLoop>,
    /// Per input point: true when the point is not a vertex of the hull
    /// (interior, on a facet, on an edge, or a duplicate).
    pub absorbed: Vec<bool>,
}

struct WTri {
    v: [usize; 3],
    n: Vec3,
    d: f64,
    alive: bool,
    conflicts: Vec<usize>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Sign of the orientation determinant det(b - a, c - a, p - a), evaluated
/// in double-double arithmetic from the raw coordinates.
fn orient_dd(pts: &[Vec3], a: usize, b: usize, c: usize, p: usize) -> f64 {
    let row = |i: usize, j: usize| -> [Dd; 3] {
        [
            dd::diff(pts[i].x(), pts[j].x()),
            dd::diff(pts[i].y(), pts[j].y()),
            dd::diff(pts[i].z(), pts[j].z()),
        ]
    };
    dd::det3(row(b, a), row(c, a), row(p, a)).value()
}

pub fn convex_hull3(points: &[Vec3]) -> Result<Hull3> {
    let n = points.len();
    if n < 4 {
        return Err(Error::Degenerate("hull needs at least 4 points".into()));
    }
    let mut scale: f64 = 0.0;
    for p in points {
        if !p.is_finite() {
            return Err(Error::Domain("non-finite point".into()));
        }
        scale = scale.max(p.x().abs()).max(p.y().abs()).max(p.z().abs());
    }
    if scale == 0.0 {
        return Err(Error::Degenerate("all points at the origin".into()));
    }
    let eps = 1e-12 * scale;

    // Seed simplex: spread-out extremes, then the farthest point from the
    // growing affine span.
    let p0 = (0..n)
        .min_by(|&i, &j| points[i].0.partial_cmp(&points[j].0).unwrap())
        .unwrap();
    let p1 = (0..n)
        .max_by(|&i, &j| {
            (points[i] - points[p0])
                .norm_sq()
                .total_cmp(&(points[j] - points[p0]).norm_sq())
        })
        .unwrap();
    let axis = points[p1] - points[p0];
    let p2 = (0..n)
        .max_by(|&i, &j| {
            axis.cross(&(points[i] - points[p0]))
                .norm_sq()
                .total_cmp(&axis.cross(&(points[j] - points[p0])).norm_sq())
        })
        .unwrap();
    let base_n = axis.cross(&(points[p2] - points[p0]));
    if base_n.norm() <= eps * eps {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    let p3 = (0..n)
        .max_by(|&i, &j| {
            base_n
                .dot(&(points[i] - points[p0]))
                .abs()
                .total_cmp(&base_n.dot(&(points[j] - points[p0])).abs())
        })
        .unwrap();
    if base_n.dot(&(points[p3] - points[p0])).abs() <= eps * base_n.norm() / scale {
        return Err(Error::Degenerate("points are coplanar".into()));
    }
    let (s2, s3) = if base_n.dot(&(points[p3] - points[p0])) > 0.0 {
        (p3, p2)
    } else {
        (p2, p3)
    };
    let seeds = [p0, p1, s2, s3];
    let interior = (points[p0] + points[p1] + points[s2] + points[s3]).scale(0.25);

    let mut tris: Vec<WTri> = Vec::new();
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();

    let make_tri = |a: usize, b: usize, c: usize, interior: &Vec3| -> Result<(usize, usize, usize, Vec3, f64)> {
        let nrm = (points[b] - points[a]).cross(&(points[c] - points[a]));
        let ln = nrm.norm();
        if ln <= 1e-20 * scale * scale {
            return Err(Error::Degenerate("degenerate hull face".into()));
        }
        let mut u = nrm.scale(1.0 / ln);
        let (mut bb, mut cc) = (b, c);
        if u.dot(&(*interior - points[a])) > 0.0 {
            u = -u;
            std::mem::swap(&mut bb, &mut cc);
        }
        let d = u.dot(&points[a]);
        Ok((a, bb, cc, u, d))
    };

    let add_tri = |tris: &mut Vec<WTri>,
                       edge_map: &mut HashMap<(usize, usize), usize>,
                       a: usize,
                       b: usize,
                       c: usize|
     -> Result<usize> {
        let (a, b, c, u, d) = make_tri(a, b, c, &interior)?;
        let idx = tris.len();
        tris.push(WTri {
            v: [a, b, c],
            n: u,
            d,
            alive: true,
            conflicts: Vec::new(),
        });
        for e in [(a, b), (b, c), (c, a)] {
            edge_map.insert(e, idx);
        }
        Ok(idx)
    };

    for f in [
        [seeds[0], seeds[1], seeds[2]],
        [seeds[0], seeds[2], seeds[3]],
        [seeds[0], seeds[3], seeds[1]],
        [seeds[1], seeds[3], seeds[2]],
    ] {
        add_tri(&mut tris, &mut edge_map, f[0], f[1], f[2])?;
    }

    let mut processed = vec![false; n];
    for s in seeds {
        processed[s] = true;
    }
    let mut witness: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        if processed[i] {
            continue;
        }
        let mut best = None;
        let mut best_d = eps;
        for (t, tri) in tris.iter().enumerate() {
            let d = tri.n.dot(&points[i]) - tri.d;
            if d > best_d {
                best_d = d;
                best = Some(t);
            }
        }
        // Points within eps of the seed simplex still get tracked so the
        // double-double re-check can promote genuinely-outside ones.
        if best.is_none() {
            for (t, tri) in tris.iter().enumerate() {
                let d = tri.n.dot(&points[i]) - tri.d;
                if d > -eps {
                    best = Some(t);
                    break;
                }
            }
        }
        if let Some(t) = best {
            witness[i] = Some(t);
            tris[t].conflicts.push(i);
        }
    }

    // Deterministic pseudo-random insertion order.
    let mut order: Vec<usize> = (0..n).filter(|i| !processed[*i]).collect();
    order.sort_by_key(|&i| (splitmix(i as u64), i));

    let mut stamp = vec![0u64; tris.len()];
    let mut epoch = 0u64;

    for &p in &order {
        let w = match witness[p] {
            Some(w) if tris[w].alive => w,
            _ => continue,
        };
        // Visible set: flood fill over face adjacency; a face is visible
        // when p is not strictly inside its plane by more than eps, which
        // deliberately includes coplanar faces so that planar extensions
        // re-fan cleanly.
        epoch += 1;
        if stamp.len() < tris.len() {
            stamp.resize(tris.len(), 0);
        }
        let mut visible: Vec<usize> = Vec::new();
        let mut stack = vec![w];
        stamp[w] = epoch;
        let mut max_dist = f64::NEG_INFINITY;
        while let Some(t) = stack.pop() {
            let dist = tris[t].n.dot(&points[p]) - tris[t].d;
            if dist <= -eps {
                continue;
            }
            visible.push(t);
            max_dist = max_dist.max(dist);
            let tv = tris[t].v;
            for e in [(tv[1], tv[0]), (tv[2], tv[1]), (tv[0], tv[2])] {
                if let Some(&nb) = edge_map.get(&e) {
                    if tris[nb].alive && stamp[nb] != epoch {
                        stamp[nb] = epoch;
                        stack.push(nb);
                    }
                }
            }
        }
        if visible.is_empty() {
            continue;
        }
        if max_dist <= eps {
            // Borderline: on the surface or just inside, up to rounding in
            // the stored planes. Decide from the raw coordinates.
            let outside = visible
                .iter()
                .any(|&t| orient_dd(points, tris[t].v[0], tris[t].v[1], tris[t].v[2], p) > 0.0);
            if !outside {
                processed[p] = true;
                continue;
            }
        }

        // Horizon: directed edges of visible faces whose outward neighbor
        // survives.
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        for &t in &visible {
            let tv = tris[t].v;
            for (a, b) in [(tv[0], tv[1]), (tv[1], tv[2]), (tv[2], tv[0])] {
                if let Some(&nb) = edge_map.get(&(b, a)) {
                    if stamp[nb] != epoch || tris[nb].n.dot(&points[p]) - tris[nb].d <= -eps {
                        horizon.push((a, b, nb));
                    }
                }
            }
        }
        if horizon.is_empty() {
            return Err(Error::Degenerate("hull update lost its horizon".into()));
        }
        let mut orphans: Vec<usize> = Vec::new();
        for &t in &visible {
            tris[t].alive = false;
            let tv = tris[t].v;
            for e in [(tv[0], tv[1]), (tv[1], tv[2]), (tv[2], tv[0])] {
                edge_map.remove(&e);
            }
            orphans.append(&mut tris[t].conflicts);
        }
        let mut fresh: Vec<usize> = Vec::with_capacity(horizon.len());
        for &(a, b, _) in &horizon {
            fresh.push(add_tri(&mut tris, &mut edge_map, a, b, p)?);
        }
        stamp.resize(tris.len(), 0);
        processed[p] = true;

        for q in orphans {
            if processed[q] || q == p {
                continue;
            }
            let mut best = None;
            let mut best_d = eps;
            for &t in &fresh {
                let d = tris[t].n.dot(&points[q]) - tris[t].d;
                if d > best_d {
                    best_d = d;
                    best = Some(t);
                }
            }
            if best.is_none() {
                // Near-coplanar points can drift just outside a surviving
                // ring face instead of a fresh one; check those before
                // dropping the point as interior.
                for &(_, _, nb) in &horizon {
                    if !tris[nb].alive {
                        continue;
                    }
                    let d = tris[nb].n.dot(&points[q]) - tris[nb].d;
                    if d > -eps {
                        best = Some(nb);
                        break;
                    }
                }
                if best.is_none() {
                    for &t in &fresh {
                        let d = tris[t].n.dot(&points[q]) - tris[t].d;
                        if d > -eps {
                            best = Some(t);
                            break;
                        }
                    }
                }
            }
            if let Some(t) = best {
                witness[q] = Some(t);
                tris[t].conflicts.push(q);
            } else {
                witness[q] = None;
            }
        }
    }

    // Compact alive triangles.
    let alive: Vec<usize> = (0..tris.len()).filter(|&t| tris[t].alive).collect();
    let mut out_tris: Vec<Tri> = Vec::with_capacity(alive.len());
    for &t in &alive {
        out_tris.push(Tri {
            v: tris[t].v,
            n: tris[t].n,
            d: tris[t].d,
        });
    }
    let facets = merge_coplanar(points, &out_tris, scale)?;
    let mut absorbed = vec![true; n];
    for f in &facets {
        for &v in &f.vertices {
            absorbed[v] = false;
        }
    }
    Ok(Hull3 {
        tris: out_tris,
        facets,
        absorbed,
    })
}

/// Group triangles into maximal coplanar patches and extract each patch's
/// boundary loop, pruning points that are collinear within an edge.
fn merge_coplanar(points: &[Vec3], tris: &[Tri], scale: f64) -> Result<Vec<FacetLoop>> {
    let m = tris.len();
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for e in [
            (tri.v[0], tri.v[1]),
            (tri.v[1], tri.v[2]),
            (tri.v[2], tri.v[0]),
        ] {
            edge_map.insert(e, t);
        }
    }
    let tol_n = 1e-9;
    let tol_d = 1e-9 * scale.max(1e-6);
    let mut group = vec![usize::MAX; m];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for t0 in 0..m {
        if group[t0] != usize::MAX {
            continue;
        }
        let g = groups.len();
        let mut members = vec![t0];
        group[t0] = g;
        let mut stack = vec![t0];
        while let Some(t) = stack.pop() {
            let tv = tris[t].v;
            for e in [(tv[1], tv[0]), (tv[2], tv[1]), (tv[0], tv[2])] {
                if let Some(&nb) = edge_map.get(&e) {
                    if group[nb] == usize::MAX
                        && tris[nb].n.dot(&tris[t0].n) >= 1.0 - tol_n
                        && (tris[nb].d - tris[t0].d).abs() <= tol_d
                    {
                        group[nb] = g;
                        members.push(nb);
                        stack.push(nb);
                    }
                }
            }
        }
        groups.push(members);
    }

    let mut facets = Vec::with_capacity(groups.len());
    for members in &groups {
        // Area-weighted plane of the patch.
        let mut nsum = Vec3::ZERO;
        for &t in members {
            let tri = &tris[t];
            let a2 = (points[tri.v[1]] - points[tri.v[0]])
                .cross(&(points[tri.v[2]] - points[tri.v[0]]))
                .norm();
            nsum += tri.n.scale(a2);
        }
        if nsum.norm() < 1e-30 {
            return Err(Error::Degenerate("facet with vanishing normal".into()));
        }
        let normal = nsum.normalized();

        // Boundary: directed edges whose reverse belongs to another patch.
        let mut next: HashMap<usize, usize> = HashMap::new();
        let g = group[members[0]];
        let mut start = usize::MAX;
        for &t in members {
            let tv = tris[t].v;
            for (a, b) in [(tv[0], tv[1]), (tv[1], tv[2]), (tv[2], tv[0])] {
                let rev = edge_map.get(&(b, a)).copied();
                if rev.map(|r| group[r]) != Some(g) {
                    if next.insert(a, b).is_some() {
                        return Err(Error::Degenerate("facet boundary is not simple".into()));
                    }
                    start = start.min(a);
                }
            }
        }
        if start == usize::MAX {
            return Err(Error::Degenerate("facet without boundary".into()));
        }
        let mut cycle = vec![start];
        let mut cur = next[&start];
        while cur != start {
            cycle.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::Degenerate("broken facet boundary".into()))?;
            if cycle.len() > next.len() {
                return Err(Error::Degenerate("facet boundary does not close".into()));
            }
        }
        if cycle.len() != next.len() {
            return Err(Error::Degenerate("facet boundary has several loops".into()));
        }

        // Prune collinear (in-edge) boundary points.
        loop {
            let k = cycle.len();
            if k < 3 {
                return Err(Error::Degenerate("facet degenerated while pruning".into()));
            }
            let mut drop_at = None;
            for i in 0..k {
                let prev = points[cycle[(i + k - 1) % k]];
                let here = points[cycle[i]];
                let nxt = points[cycle[(i + 1) % k]];
                let e1 = here - prev;
                let e2 = nxt - here;
                if e1.cross(&e2).norm() <= 1e-9 * e1.norm() * e2.norm() + 1e-30 {
                    drop_at = Some(i);
                    break;
                }
            }
            match drop_at {
                Some(i) => {
                    cycle.remove(i);
                }
                None => break,
            }
        }
        let offset = cycle.iter().map(|&v| normal.dot(&points[v])).sum::<f64>()
            / cycle.len() as f64;
        facets.push(FacetLoop {
            normal,
            offset,
            vertices: cycle,
        });
    }
    Ok(facets)
}
