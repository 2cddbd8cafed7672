//! Planar convex hull (Graham scan). Points are `Vec3` with zero z.

use crate::error::{Error, Result};
use crate::vec::Vec3;

#[derive(Debug)]
pub struct Hull2 {
    /// Input point indices of the hull vertices, counterclockwise.
    pub cycle: Vec<usize>,
    /// Per input point: true when not a hull vertex (interior, in-edge
    /// collinear, or duplicate).
    pub absorbed: Vec<bool>,
}

fn cross2(o: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x())
}

pub fn convex_hull2(points: &[Vec3]) -> Result<Hull2> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Degenerate("hull needs at least 3 points".into()));
    }
    let mut scale: f64 = 0.0;
    for p in points {
        if !p.is_finite() || p.z() != 0.0 {
            return Err(Error::Domain("planar hull points must have z = 0".into()));
        }
        scale = scale.max(p.x().abs()).max(p.y().abs());
    }
    let eps2 = 1e-12 * scale * scale;

    let pivot = (0..n)
        .min_by(|&i, &j| {
            (points[i].y(), points[i].x())
                .partial_cmp(&(points[j].y(), points[j].x()))
                .unwrap()
        })
        .unwrap();
    let mut rest: Vec<usize> = (0..n).filter(|&i| i != pivot).collect();
    rest.sort_by(|&i, &j| {
        let c = cross2(&points[pivot], &points[i], &points[j]);
        if c.abs() > eps2 {
            return c.total_cmp(&0.0).reverse();
        }
        // Same ray from the pivot: nearer first, ties by index.
        let di = (points[i] - points[pivot]).norm_sq();
        let dj = (points[j] - points[pivot]).norm_sq();
        di.total_cmp(&dj).then(i.cmp(&j))
    });

    let mut stack: Vec<usize> = vec![pivot];
    for &i in &rest {
        if (points[i] - points[*stack.last().unwrap()]).norm_sq() <= eps2 {
            continue; // duplicate of the current top
        }
        while stack.len() >= 2 {
            let b = stack[stack.len() - 1];
            let a = stack[stack.len() - 2];
            // Keep strictly left turns only; collinear middles are absorbed.
            if cross2(&points[a], &points[b], &points[i]) <= eps2 {
                stack.pop();
            } else {
                break;
            }
        }
        stack.push(i);
    }
    if stack.len() < 3 {
        return Err(Error::Degenerate("points are collinear".into()));
    }
    // The closing edge can still have a collinear tail.
    while stack.len() >= 3
        && cross2(
            &points[stack[stack.len() - 2]],
            &points[stack[stack.len() - 1]],
            &points[stack[0]],
        ) <= eps2
    {
        stack.pop();
    }
    let mut absorbed = vec![true; n];
    for &i in &stack {
        absorbed[i] = false;
    }
    Ok(Hull2 {
        cycle: stack,
        absorbed,
    })
}
