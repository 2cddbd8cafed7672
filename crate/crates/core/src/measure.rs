//! Finite Borel measures on the sphere, in the two shapes the pipeline
//! needs: atom lists (point masses at unit directions) and piecewise
//! constant densities over a [`SphereGrid`]. Alongside the types live the
//! admissibility checks the solver gates on: hemisphere concentration,
//! evenness, and vanishing on great subspheres.

use std::sync::Arc;

use crate::body;
use crate::error::{Error, Result};
use crate::par;
use crate::sphere::SphereGrid;
use crate::vec::Vec3;

/// Point masses at pairwise distinct unit directions.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    pub dim: usize,
    pub dirs: Vec<Vec3>,
    pub masses: Vec<f64>,
}

impl AtomicMeasure {
    pub fn new(dim: usize, dirs: Vec<Vec3>, masses: Vec<f64>) -> Result<AtomicMeasure> {
        if dim != 2 && dim != 3 {
            return Err(Error::UnsupportedDim(dim));
        }
        if dirs.len() != masses.len() {
            return Err(Error::DegenerateMeasure(format!(
                "{} directions but {} masses",
                dirs.len(),
                masses.len()
            )));
        }
        for (i, u) in dirs.iter().enumerate() {
            if !u.is_finite() || (u.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::DegenerateMeasure(format!(
                    "direction {i} is not a unit vector"
                )));
            }
            if dim == 2 && u.z() != 0.0 {
                return Err(Error::DegenerateMeasure(format!(
                    "direction {i} leaves the plane"
                )));
            }
        }
        for (i, m) in masses.iter().enumerate() {
            if !m.is_finite() || *m < 0.0 {
                return Err(Error::DegenerateMeasure(format!("atom {i} has mass {m}")));
            }
        }
        for i in 0..dirs.len() {
            for j in (i + 1)..dirs.len() {
                if (dirs[i] - dirs[j]).norm() <= 1e-12 {
                    return Err(Error::DegenerateMeasure(format!(
                        "directions {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(AtomicMeasure { dim, dirs, masses })
    }

    pub fn total(&self) -> f64 {
        par::sum_seq(self.masses.iter().copied())
    }
}

/// Piecewise-constant density with respect to spherical Lebesgue measure:
/// one nonnegative value per grid cell. Always absolutely continuous by
/// construction.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub grid: Arc<SphereGrid>,
    pub values: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<DensityField> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} density values on a {}-cell grid",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(Error::DegenerateMeasure(
                "density values must be finite and nonnegative".into(),
            ));
        }
        Ok(DensityField { grid, values })
    }

    /// The constant density `c`.
    pub fn uniform(grid: Arc<SphereGrid>, c: f64) -> Result<DensityField> {
        let n = grid.len();
        DensityField::new(grid, vec![c; n])
    }

    /// Spherical Lebesgue measure (`g = 1`).
    pub fn lebesgue(grid: Arc<SphereGrid>) -> DensityField {
        let n = grid.len();
        DensityField {
            grid,
            values: vec![1.0; n],
        }
    }

    /// Mass of each cell: density times exact cell area.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.grid.areas)
            .map(|(v, a)| v * a)
            .collect()
    }

    pub fn total(&self) -> f64 {
        par::sum_seq(self.cell_masses())
    }

    /// Whether every cell carries positive density — the finite stand-in
    /// for "positive on every nonempty open set".
    pub fn strictly_positive(&self) -> bool {
        self.values.iter().all(|v| *v > 0.0)
    }
}

/// A finite Borel measure in one of the two supported representations.
#[derive(Debug, Clone)]
pub enum Measure {
    Atomic(AtomicMeasure),
    Density(DensityField),
}

impl Measure {
    pub fn dim(&self) -> usize {
        match self {
            Measure::Atomic(a) => a.dim,
            Measure::Density(d) => d.grid.dim,
        }
    }

    /// Directions that carry positive mass: atom directions, or the cell
    /// directions of positive-density cells.
    pub fn support_dirs(&self) -> Vec<Vec3> {
        match self {
            Measure::Atomic(a) => a
                .dirs
                .iter()
                .zip(&a.masses)
                .filter(|(_, m)| **m > 0.0)
                .map(|(u, _)| *u)
                .collect(),
            Measure::Density(d) => d
                .grid
                .dirs
                .iter()
                .zip(&d.values)
                .filter(|(_, v)| **v > 0.0)
                .map(|(u, _)| *u)
                .collect(),
        }
    }

    /// Weights aligned with [`Measure::support_dirs`].
    pub fn support_weights(&self) -> Vec<f64> {
        match self {
            Measure::Atomic(a) => a.masses.iter().copied().filter(|m| *m > 0.0).collect(),
            Measure::Density(d) => d
                .cell_masses()
                .into_iter()
                .filter(|m| *m > 0.0)
                .collect(),
        }
    }
}

/// Total mass `|m|`; an all-zero measure is rejected as degenerate.
pub fn total_mass(m: &Measure) -> Result<f64> {
    let t = match m {
        Measure::Atomic(a) => a.total(),
        Measure::Density(d) => d.total(),
    };
    if t <= 0.0 {
        return Err(Error::DegenerateMeasure(
            "measure has no mass (degenerate measure)".into(),
        ));
    }
    Ok(t)
}

/// The p-mean norm `||f : m||_p` of a positive field against the measure:
/// `((1/|m|) \int f^p dm)^(1/p)` for `p != 0` and the geometric mean
/// `exp((1/|m|) \int log f dm)` at `p = 0`. `f` is indexed like the atoms
/// (atomic) or the grid cells (density).
pub fn measure_norm(f: &[f64], m: &Measure, p: f64) -> Result<f64> {
    let weights = match m {
        Measure::Atomic(a) => {
            if f.len() != a.dirs.len() {
                return Err(Error::GridMismatch(format!(
                    "{} field values for {} atoms",
                    f.len(),
                    a.dirs.len()
                )));
            }
            a.masses.clone()
        }
        Measure::Density(d) => {
            if f.len() != d.grid.len() {
                return Err(Error::GridMismatch(format!(
                    "{} field values for {} cells",
                    f.len(),
                    d.grid.len()
                )));
            }
            d.cell_masses()
        }
    };
    let total = total_mass(m)?;
    for (fi, w) in f.iter().zip(&weights) {
        if *w > 0.0 && (!fi.is_finite() || *fi <= 0.0) {
            return Err(Error::Domain(format!(
                "field value {fi} is not positive on the measure's support"
            )));
        }
    }
    if p == 0.0 {
        let s = par::sum_compensated(
            f.iter()
                .zip(&weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(fi, w)| w * fi.ln()),
        );
        Ok((s / total).exp())
    } else {
        let s = par::sum_compensated(
            f.iter()
                .zip(&weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(fi, w)| w * fi.powf(p)),
        );
        Ok((s / total).powf(1.0 / p))
    }
}

/// Outcome of the closed-hemisphere test.
#[derive(Debug, Clone)]
pub struct HemisphereCheck {
    /// True when the support is NOT concentrated in any closed hemisphere
    /// (equivalently, the origin is interior to the hull of the support).
    pub ok: bool,
    /// A direction `x` with `<x, u> <= 0` across the support when `ok` is
    /// false.
    pub witness: Option<Vec3>,
    /// Diagnostic: the minimum over a coarse grid of
    /// `phi(x) = sum_u m(u) max(0, <x,u>)^p`.
    pub min_phi: f64,
}

/// Decide whether the measure gives positive mass to every open hemisphere.
/// Exact in dimensions 2 and 3 through the geometry of the support
/// directions; `phi` is minimized over a coarse grid for reporting only.
pub fn check_not_hemisphere_concentrated(m: &Measure, p: f64) -> Result<HemisphereCheck> {
    total_mass(m)?;
    let support = m.support_dirs();
    let witness = hemisphere_witness(m.dim(), &support)?;
    let min_phi = min_phi_on_grid(m, p)?;
    Ok(HemisphereCheck {
        ok: witness.is_none(),
        witness,
        min_phi,
    })
}

/// A direction whose closed opposite hemisphere swallows all of `dirs`,
/// or `None` when no such direction exists (origin interior to the hull).
fn hemisphere_witness(dim: usize, dirs: &[Vec3]) -> Result<Option<Vec3>> {
    const EPS: f64 = 1e-9;
    if dirs.is_empty() {
        return Err(Error::DegenerateMeasure(
            "measure has empty support".into(),
        ));
    }
    match dim {
        2 => {
            let mut angles: Vec<f64> = dirs.iter().map(Vec3::planar_angle).collect();
            angles.sort_by(f64::total_cmp);
            let tau = std::f64::consts::TAU;
            // Largest circular gap between consecutive support angles.
            let mut gap_start = *angles.last().unwrap();
            let mut gap = angles[0] + tau - gap_start;
            for w in angles.windows(2) {
                if w[1] - w[0] > gap {
                    gap = w[1] - w[0];
                    gap_start = w[0];
                }
            }
            if gap >= std::f64::consts::PI - EPS {
                // Support fits in the complementary arc; the center of the
                // empty gap is at least a quarter turn from every atom.
                let center = gap_start + gap / 2.0;
                Ok(Some(Vec3::planar(center.cos(), center.sin())))
            } else {
                Ok(None)
            }
        }
        3 => {
            if dirs.len() < 3 {
                let s = dirs.iter().fold(Vec3::ZERO, |acc, u| acc + *u);
                let w = if s.norm() > 1e-9 {
                    s.scale(-1.0 / s.norm())
                } else {
                    // Antipodal pair: any orthogonal direction works.
                    dirs[0].tangent_basis().0
                };
                return Ok(Some(w));
            }
            match body::hull3::convex_hull3(dirs) {
                Ok(hull) => {
                    let mut worst: Option<(f64, Vec3)> = None;
                    for f in &hull.facets {
                        if worst.as_ref().is_none_or(|(d, _)| f.offset < *d) {
                            worst = Some((f.offset, f.normal));
                        }
                    }
                    match worst {
                        Some((d, n)) if d <= EPS => Ok(Some(n)),
                        Some(_) => Ok(None),
                        None => Err(Error::Degenerate(
                            "support hull produced no facets".into(),
                        )),
                    }
                }
                Err(_) => {
                    // Degenerate hull: all support directions sit on one
                    // plane. Find its normal from a well-spread triple.
                    let a = dirs[0];
                    let b = *dirs
                        .iter()
                        .max_by(|x, y| {
                            (**x - a).norm_sq().total_cmp(&(**y - a).norm_sq())
                        })
                        .unwrap();
                    let mut n = Vec3::ZERO;
                    for u in dirs {
                        let c = (b - a).cross(&(*u - a));
                        if c.norm_sq() > n.norm_sq() {
                            n = c;
                        }
                    }
                    if n.norm() <= 1e-12 {
                        // Collinear point set on the sphere: at most an
                        // antipodal pair, already handled above — treat as
                        // concentrated with an orthogonal witness.
                        return Ok(Some(a.tangent_basis().0));
                    }
                    let n = n.normalized();
                    let c = n.dot(&a);
                    // Plane through the origin (great circle) or offset
                    // plane: either way the support misses one open
                    // hemisphere.
                    Ok(Some(if c > 0.0 { -n } else { n }))
                }
            }
        }
        d => Err(Error::UnsupportedDim(d)),
    }
}

/// Minimum over a coarse grid of candidate poles of the hemisphere
/// functional `phi(x) = sum m(u) (<x,u>)_+^p` (reporting diagnostic).
fn min_phi_on_grid(m: &Measure, p: f64) -> Result<f64> {
    let dim = m.dim();
    let probe = SphereGrid::build(dim, 2)?;
    let support = m.support_dirs();
    let weights = m.support_weights();
    let mut best = f64::INFINITY;
    for x in &probe.dirs {
        let phi = par::sum_seq(support.iter().zip(&weights).map(|(u, w)| {
            let d = x.dot(u);
            if d > 0.0 {
                w * d.powf(p)
            } else {
                0.0
            }
        }));
        if phi < best {
            best = phi;
        }
    }
    Ok(best)
}

/// Whether the measure is even (invariant under the antipodal map) within
/// `tol` on masses. Atomic supports must be antipodally closed; density
/// grids must carry an antipodal pairing.
pub fn check_even(m: &Measure, tol: f64) -> bool {
    match m {
        Measure::Atomic(a) => {
            let n = a.dirs.len();
            for i in 0..n {
                let neg = -a.dirs[i];
                let Some(j) = (0..n).find(|&j| (a.dirs[j] - neg).norm() <= 1e-9) else {
                    return false;
                };
                if (a.masses[i] - a.masses[j]).abs() > tol {
                    return false;
                }
            }
            true
        }
        Measure::Density(d) => {
            for i in 0..d.grid.len() {
                let Some(j) = d.grid.antipode_of(i) else {
                    return false;
                };
                if (d.values[i] - d.values[j]).abs() > tol {
                    return false;
                }
            }
            true
        }
    }
}

/// Whether the measure assigns zero mass to every great subsphere, with a
/// note explaining the verdict. Densities qualify by absolute continuity;
/// atom lists never do (every atom lies on some great subsphere).
pub fn check_great_subsphere_vanishing(m: &Measure) -> (bool, &'static str) {
    match m {
        Measure::Density(_) => (
            true,
            "absolutely continuous by construction; great subspheres are null sets",
        ),
        Measure::Atomic(_) => (
            false,
            "every atom lies on some great subsphere; treat atomic input as a \
             discretization of an admissible continuous measure",
        ),
    }
}

/// Even part of the measure: mass `(m(u) + m(-u)) / 2` at both `u` and
/// `-u`. Idempotent, total-mass preserving, and exactly even.
pub fn symmetrize_even(m: &Measure) -> Result<Measure> {
    match m {
        Measure::Atomic(a) => {
            let n = a.dirs.len();
            let mut used = vec![false; n];
            let mut dirs = Vec::with_capacity(2 * n);
            let mut masses = Vec::with_capacity(2 * n);
            for i in 0..n {
                if used[i] {
                    continue;
                }
                used[i] = true;
                let neg = -a.dirs[i];
                let partner = (0..n).find(|&j| !used[j] && (a.dirs[j] - neg).norm() <= 1e-9);
                let other = match partner {
                    Some(j) => {
                        used[j] = true;
                        a.masses[j]
                    }
                    None => 0.0,
                };
                let avg = (a.masses[i] + other) / 2.0;
                dirs.push(a.dirs[i]);
                masses.push(avg);
                dirs.push(neg);
                masses.push(avg);
            }
            Ok(Measure::Atomic(AtomicMeasure::new(a.dim, dirs, masses)?))
        }
        Measure::Density(d) => {
            let mut values = vec![0.0; d.values.len()];
            for i in 0..d.values.len() {
                let j = d.grid.antipode_of(i).ok_or_else(|| {
                    Error::GridMismatch(
                        "grid has no antipodal pairing; cannot symmetrize".into(),
                    )
                })?;
                values[i] = (d.values[i] + d.values[j]) / 2.0;
            }
            Ok(Measure::Density(DensityField::new(
                d.grid.clone(),
                values,
            )?))
        }
    }
}

/// Per-grid-direction weights of the measure: atom masses snapped to their
/// grid directions (each atom must sit on one), or per-cell masses for a
/// density living on this very grid.
pub fn weights_on_grid(m: &Measure, grid: &Arc<SphereGrid>) -> Result<Vec<f64>> {
    match m {
        Measure::Atomic(a) => {
            if a.dim != grid.dim {
                return Err(Error::GridMismatch(format!(
                    "measure dimension {} vs grid dimension {}",
                    a.dim, grid.dim
                )));
            }
            let mut w = vec![0.0; grid.len()];
            for (u, mass) in a.dirs.iter().zip(&a.masses) {
                let j = grid.nearest_dir(u);
                if (*u - grid.dirs[j]).norm() > 1e-9 {
                    return Err(Error::GridMismatch(format!(
                        "atom at ({:.6}, {:.6}, {:.6}) is not on a grid direction",
                        u.x(),
                        u.y(),
                        u.z()
                    )));
                }
                w[j] += mass;
            }
            Ok(w)
        }
        Measure::Density(d) => {
            let same = Arc::ptr_eq(&d.grid, grid)
                || (d.grid.dim == grid.dim
                    && d.grid.len() == grid.len()
                    && d.grid
                        .dirs
                        .iter()
                        .zip(&grid.dirs)
                        .all(|(a, b)| (*a - *b).norm() <= 1e-15));
            if !same {
                return Err(Error::GridMismatch(
                    "density lives on a different grid".into(),
                ));
            }
            Ok(d.cell_masses())
        }
    }
}
