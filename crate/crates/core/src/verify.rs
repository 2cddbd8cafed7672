//! Independent diagnostics for solver output: measure residuals, cap
//! comparisons, a pointwise curvature-equation residual, and a weak
//! convergence probe.
//!
//! Everything here recomputes its inputs from scratch (forward image
//! measures, support values, local fits) so that a bug in the solver
//! cannot co-sign its own output.

use std::sync::Arc;

use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::gauss::{self, GaussImageMeasure};
use crate::measure::{self, DensityField, Measure};
use crate::par;
use crate::sphere::SphereGrid;
use crate::vec::{self, Vec3};

/// One cap from the standard comparison family: all sphere points whose
/// inner product with `pole` is at least `delta` (both signs when
/// `symmetric` is set).
#[derive(Clone, Debug)]
pub struct CapResidual {
    pub pole: Vec3,
    pub delta: f64,
    pub symmetric: bool,
    pub target_mass: f64,
    pub image_mass: f64,
    pub gap: f64,
}

#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// `max_i |mu_i - image_i| / |mu|` over matched atom locations.
    pub max_atom_residual: f64,
    /// `sum_i |mu_i - image_i| / |mu|`.
    pub tv_residual: f64,
    pub cap_residuals: Vec<CapResidual>,
    /// Filled by [`ma_residual`], not by [`measure_residual`].
    pub ma_pointwise: Option<Vec<f64>>,
}

const CAP_DELTAS: [f64; 3] = [0.1, 0.5, 0.9];

/// Match two atom lists by direction (within `1e-9`) and aggregate masses.
/// Returns per-location `(target, image)` pairs covering both supports.
fn matched_masses(
    mu_dirs: &[Vec3],
    mu_masses: &[f64],
    im_dirs: &[Vec3],
    im_masses: &[f64],
) -> Vec<(Vec3, f64, f64)> {
    let mut rows: Vec<(Vec3, f64, f64)> = mu_dirs
        .iter()
        .zip(mu_masses)
        .map(|(d, m)| (*d, *m, 0.0))
        .collect();
    'outer: for (d, m) in im_dirs.iter().zip(im_masses) {
        for row in rows.iter_mut() {
            if (row.0 - *d).norm() < 1e-9 {
                row.2 += m;
                continue 'outer;
            }
        }
        rows.push((*d, 0.0, *m));
    }
    rows
}

/// Compare a target measure against a computed image measure: atom-wise
/// worst case, total variation, and mass gaps over the standard cap
/// family (poles at the level-1 grid directions, three opening
/// parameters, plain and symmetric variants).
pub fn measure_residual(mu: &Measure, gim: &GaussImageMeasure) -> Result<ResidualReport> {
    if mu.dim() != gim.dim {
        return Err(Error::GridMismatch(format!(
            "target dimension {} against image dimension {}",
            mu.dim(),
            gim.dim
        )));
    }
    let image = gim.to_atomic()?;
    let mu_dirs = mu.support_dirs();
    let mu_masses = mu.support_weights();
    let mu_total = measure::total_mass(mu)?;
    let rows = matched_masses(&mu_dirs, &mu_masses, &image.dirs, &image.masses);

    let max_atom = rows
        .iter()
        .map(|(_, a, b)| (a - b).abs())
        .fold(0.0f64, f64::max)
        / mu_total;
    let tv = par::sum_compensated(rows.iter().map(|(_, a, b)| (a - b).abs())) / mu_total;

    let poles = Arc::new(SphereGrid::build(mu.dim(), 1)?);
    let mut caps = Vec::with_capacity(poles.len() * CAP_DELTAS.len() * 2);
    for pole in &poles.dirs {
        for &delta in &CAP_DELTAS {
            for symmetric in [false, true] {
                let inside = |u: &Vec3| {
                    let d = u.dot(pole);
                    if symmetric {
                        d.abs() >= delta
                    } else {
                        d >= delta
                    }
                };
                let target_mass = par::sum_compensated(
                    rows.iter()
                        .filter(|(u, _, _)| inside(u))
                        .map(|(_, a, _)| *a),
                );
                let image_mass = par::sum_compensated(
                    rows.iter()
                        .filter(|(u, _, _)| inside(u))
                        .map(|(_, _, b)| *b),
                );
                caps.push(CapResidual {
                    pole: *pole,
                    delta,
                    symmetric,
                    target_mass,
                    image_mass,
                    gap: (target_mass - image_mass).abs(),
                });
            }
        }
    }

    Ok(ResidualReport {
        max_atom_residual: max_atom,
        tv_residual: tv,
        cap_residuals: caps,
        ma_pointwise: None,
    })
}

#[derive(Clone, Debug)]
pub struct MaResidualReport {
    /// Per-grid-node value of the curvature expression minus the target
    /// density.
    pub residuals: Vec<f64>,
    /// Per-node relative root-mean-square error of the local quadratic
    /// fit; large values mean the body is not smooth there and the
    /// residual at that node is unreliable.
    pub fit_rms: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Number of neighbors in the local quadratic fit.
fn fit_neighbors(dim: usize) -> usize {
    if dim == 2 {
        5
    } else {
        12
    }
}

/// Indices of the `k` grid directions nearest to `x`, excluding `i`.
fn nearest_neighbors(grid: &SphereGrid, i: usize, k: usize) -> Vec<usize> {
    let x = grid.dirs[i];
    let mut order: Vec<usize> = (0..grid.len()).filter(|&j| j != i).collect();
    order.sort_by(|&a, &b| grid.dirs[b].dot(&x).total_cmp(&grid.dirs[a].dot(&x)));
    order.truncate(k);
    order
}

/// Geodesic (exponential-map) coordinates of `y` in the tangent plane at
/// `x`, expressed in the basis `(t1, t2)`.
fn log_map(x: &Vec3, t1: &Vec3, t2: &Vec3, y: &Vec3) -> (f64, f64) {
    let c = y.dot(x).clamp(-1.0, 1.0);
    let theta = c.acos();
    let tang = *y - x.scale(c);
    let n = tang.norm();
    if n < 1e-15 {
        return (0.0, 0.0);
    }
    let w = tang.scale(theta / n);
    (w.dot(t1), w.dot(t2))
}

struct LocalFit {
    h: f64,
    grad: Vec3,
    grad_sq: f64,
    det_term: f64,
    rms: f64,
}

/// Fit `h` to second order around node `i` in geodesic normal
/// coordinates; in these coordinates the Euclidean gradient and Hessian
/// at the center are the spherical covariant ones.
fn local_quadratic(grid: &SphereGrid, h: &[f64], i: usize) -> Option<LocalFit> {
    let x = grid.dirs[i];
    let neighbors = nearest_neighbors(grid, i, fit_neighbors(grid.dim));
    if grid.dim == 2 {
        // One angular coordinate: h(t) ~ c + b t + a t^2 / 2.
        let base = x.planar_angle();
        let mut rows: Vec<(f64, f64)> = vec![(0.0, h[i])];
        for j in neighbors {
            let mut t = grid.dirs[j].planar_angle() - base;
            while t > std::f64::consts::PI {
                t -= 2.0 * std::f64::consts::PI;
            }
            while t <= -std::f64::consts::PI {
                t += 2.0 * std::f64::consts::PI;
            }
            rows.push((t, h[j]));
        }
        let s = rows.iter().map(|(t, _)| t.abs()).fold(0.0f64, f64::max);
        let q = 3;
        let mut ata = vec![vec![0.0; q]; q];
        let mut atb = vec![0.0; q];
        for (t, y) in &rows {
            let t = t / s;
            let row = [1.0, t, 0.5 * t * t];
            for a in 0..q {
                for b in 0..q {
                    ata[a][b] += row[a] * row[b];
                }
                atb[a] += row[a] * y;
            }
        }
        let sol = vec::solve_dense(&mut ata, &mut atb, 1e-14)?;
        let (c, b, a2) = (sol[0], sol[1] / s, sol[2] / (s * s));
        let mut sq = 0.0;
        for (t, y) in &rows {
            let fit = c + b * t + 0.5 * a2 * t * t;
            sq += (y - fit) * (y - fit);
        }
        let rms = (sq / rows.len() as f64).sqrt() / c.abs().max(1e-300);
        // Tangent direction of increasing angle.
        let tangent = Vec3::planar(-x.y(), x.x());
        Some(LocalFit {
            h: c,
            grad: tangent.scale(b),
            grad_sq: b * b,
            det_term: a2 + c,
            rms,
        })
    } else {
        let (t1, t2) = x.tangent_basis();
        let mut rows: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, h[i])];
        for j in neighbors {
            let (u, v) = log_map(&x, &t1, &t2, &grid.dirs[j]);
            rows.push((u, v, h[j]));
        }
        let s = rows
            .iter()
            .map(|(u, v, _)| u.hypot(*v))
            .fold(0.0f64, f64::max);
        let q = 6;
        let mut ata = vec![vec![0.0; q]; q];
        let mut atb = vec![0.0; q];
        for (u, v, y) in &rows {
            let (u, v) = (u / s, v / s);
            let row = [1.0, u, v, 0.5 * u * u, u * v, 0.5 * v * v];
            for a in 0..q {
                for b in 0..q {
                    ata[a][b] += row[a] * row[b];
                }
                atb[a] += row[a] * y;
            }
        }
        let sol = vec::solve_dense(&mut ata, &mut atb, 1e-14)?;
        let c = sol[0];
        let (b1, b2) = (sol[1] / s, sol[2] / s);
        let (h11, h12, h22) = (sol[3] / (s * s), sol[4] / (s * s), sol[5] / (s * s));
        let mut sq = 0.0;
        for (u, v, y) in &rows {
            let fit = sol[0]
                + sol[1] * (u / s)
                + sol[2] * (v / s)
                + 0.5 * sol[3] * (u / s) * (u / s)
                + sol[4] * (u / s) * (v / s)
                + 0.5 * sol[5] * (v / s) * (v / s);
            sq += (y - fit) * (y - fit);
        }
        let rms = (sq / rows.len() as f64).sqrt() / c.abs().max(1e-300);
        Some(LocalFit {
            h: c,
            grad: t1.scale(b1) + t2.scale(b2),
            grad_sq: b1 * b1 + b2 * b2,
            det_term: (h11 + c) * (h22 + c) - h12 * h12,
            rms,
        })
    }
}

/// Pointwise residual of the curvature equation satisfied by the support
/// function `h = 1/rho_K` of the polar body: at each grid node `x`,
///
/// `g(nu) * h^{1-p} * det(Hess h + h I) / (|grad h|^2 + h^2)^{n/2} - f(x)`
///
/// with `nu = (grad h + h x) / |grad h + h x|`. The derivatives come from
/// a local quadratic fit in geodesic coordinates, so this is meaningful
/// on smooth (ball-like) bodies; a kinked body inflates the fit error,
/// which is reported per node and summarized as a warning.
pub fn ma_residual(
    body: &Polytope,
    grid: &Arc<SphereGrid>,
    f_density: &[f64],
    g_density: &[f64],
    p: f64,
) -> Result<MaResidualReport> {
    if body.dim != grid.dim {
        return Err(Error::GridMismatch(format!(
            "body dimension {} against grid dimension {}",
            body.dim, grid.dim
        )));
    }
    if f_density.len() != grid.len() || g_density.len() != grid.len() {
        return Err(Error::GridMismatch(
            "density vectors must have one value per grid cell".into(),
        ));
    }
    let h: Vec<f64> = par::map_indexed(grid.len(), |i| {
        body.radial(&grid.dirs[i]).map(|r| 1.0 / r)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    if h.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::Domain(
            "radial function must be finite and positive on the grid".into(),
        ));
    }

    let n_half = grid.dim as f64 / 2.0;
    let fits: Vec<Option<LocalFit>> =
        par::map_indexed(grid.len(), |i| local_quadratic(grid, &h, i));
    let mut residuals = Vec::with_capacity(grid.len());
    let mut fit_rms = Vec::with_capacity(grid.len());
    let mut bad = 0usize;
    let mut worst = 0.0f64;
    for (i, fit) in fits.iter().enumerate() {
        let Some(fit) = fit else {
            return Err(Error::Degenerate(format!(
                "local fit at node {i} is singular"
            )));
        };
        let normal = fit.grad + grid.dirs[i].scale(fit.h);
        let nu = normal.normalized();
        let g = g_density[grid.nearest_dir(&nu)];
        let lhs =
            g * fit.h.powf(1.0 - p) * fit.det_term / (fit.grad_sq + fit.h * fit.h).powf(n_half);
        residuals.push(lhs - f_density[i]);
        fit_rms.push(fit.rms);
        if fit.rms > 1e-3 {
            bad += 1;
            worst = worst.max(fit.rms);
        }
    }
    let mut warnings = Vec::new();
    if bad > 0 {
        warnings.push(format!(
            "body is not smooth at the fit scale: {bad} of {} nodes have relative \
             fit error above 1e-3 (worst {worst:.3e}); residuals there are unreliable",
            grid.len()
        ));
    }
    Ok(MaResidualReport {
        residuals,
        fit_rms,
        warnings,
    })
}

/// For a sequence of bodies approaching `k0`, integrate `f` against each
/// body's image measure and report the gap to the limit body's integral.
/// The gaps must tend to zero for continuous `f` when the bodies converge.
pub fn weak_convergence_probe<F>(
    ks: &[Polytope],
    k0: &Polytope,
    lambda: &DensityField,
    f: F,
) -> Result<Vec<f64>>
where
    F: Fn(&Vec3) -> f64,
{
    let integral = |k: &Polytope| -> Result<f64> {
        let gim = gauss::gauss_image_measure(k, lambda)?;
        Ok(par::sum_compensated(
            gim.entries.iter().map(|e| f(&e.dir) * e.mass),
        ))
    };
    let base = integral(k0)?;
    ks.iter()
        .map(|k| Ok((integral(k)? - base).abs()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::RadialField;

    fn ball_polytope(grid: &Arc<SphereGrid>, r: f64) -> Polytope {
        RadialField::constant(grid.clone(), r)
            .unwrap()
            .hull()
            .unwrap()
            .body
    }

    #[test]
    fn forward_measure_has_zero_residual_against_itself() {
        let grid = Arc::new(SphereGrid::build(2, 2).unwrap());
        let lambda = DensityField::lebesgue(grid.clone());
        let body = ball_polytope(&grid, 1.3);
        let gim = gauss::lp_gauss_image_measure(&body, &lambda, 2.0).unwrap();
        let mu = Measure::Atomic(gim.to_atomic().unwrap());
        let report = measure_residual(&mu, &gim).unwrap();
        assert_eq!(report.max_atom_residual, 0.0);
        assert_eq!(report.tv_residual, 0.0);
        assert!(report.cap_residuals.iter().all(|c| c.gap == 0.0));
        assert!(report.ma_pointwise.is_none());
        // Standard family: 16 level-1 poles, 3 openings, 2 variants.
        assert_eq!(report.cap_residuals.len(), 16 * 3 * 2);
    }

    #[test]
    fn perturbing_one_atom_moves_the_residuals_by_exactly_that_mass() {
        let grid = Arc::new(SphereGrid::build(2, 1).unwrap());
        let lambda = DensityField::lebesgue(grid.clone());
        let body = ball_polytope(&grid, 1.0);
        let gim = gauss::gauss_image_measure(&body, &lambda).unwrap();
        let clean = gim.to_atomic().unwrap();
        let mut masses = clean.masses.clone();
        let bump = 0.1 * masses[0];
        masses[0] += bump;
        let mu = Measure::Atomic(
            crate::measure::AtomicMeasure::new(2, clean.dirs.clone(), masses.clone()).unwrap(),
        );
        let total: f64 = masses.iter().sum();

        let report = measure_residual(&mu, &gim).unwrap();
        assert!((report.tv_residual - bump / total).abs() < 1e-15);
        assert!((report.max_atom_residual - bump / total).abs() < 1e-15);
        for cap in &report.cap_residuals {
            let inside = if cap.symmetric {
                clean.dirs[0].dot(&cap.pole).abs() >= cap.delta
            } else {
                clean.dirs[0].dot(&cap.pole) >= cap.delta
            };
            let expect = if inside { bump } else { 0.0 };
            assert!(
                (cap.gap - expect).abs() < 1e-12,
                "pole {:?} delta {} symmetric {}: gap {} expect {}",
                cap.pole,
                cap.delta,
                cap.symmetric,
                cap.gap,
                expect
            );
        }
    }

    #[test]
    fn ball_satisfies_the_curvature_equation_exactly() {
        for (dim, level) in [(2usize, 3u32), (3, 2)] {
            let grid = Arc::new(SphereGrid::build(dim, level).unwrap());
            let r = 2.0;
            let body = ball_polytope(&grid, r);
            for p in [-1.0f64, 0.0, 2.0] {
                let f = vec![r.powf(p); grid.len()];
                let g = vec![1.0; grid.len()];
                let report = ma_residual(&body, &grid, &f, &g, p).unwrap();
                let worst = report
                    .residuals
                    .iter()
                    .fold(0.0f64, |a, x| a.max(x.abs()));
                assert!(worst < 1e-9, "dim {dim} p {p}: worst residual {worst}");
                assert!(report.warnings.is_empty(), "{:?}", report.warnings);

                // Doubling the target density shifts the residual by it.
                let f2 = vec![2.0 * r.powf(p); grid.len()];
                let shifted = ma_residual(&body, &grid, &f2, &g, p).unwrap();
                for (a, b) in report.residuals.iter().zip(&shifted.residuals) {
                    assert!((b - (a - r.powf(p))).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn kinked_body_is_flagged_as_unreliable() {
        let grid = Arc::new(SphereGrid::build(2, 3).unwrap());
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
        let f = vec![1.0; grid.len()];
        let g = vec![1.0; grid.len()];
        let report = ma_residual(&square, &grid, &f, &g, 2.0).unwrap();
        assert!(
            !report.warnings.is_empty(),
            "a square's support function has corners; the fit must flag them"
        );
        assert!(report.fit_rms.iter().any(|r| *r > 1e-3));
    }

    #[test]
    fn probe_reports_vanishing_gaps_for_converging_bodies() {
        let grid = Arc::new(SphereGrid::build(2, 3).unwrap());
        let lambda = DensityField::lebesgue(grid.clone());
        let k0 = ball_polytope(&grid, 1.0);

        // Scaling leaves every normal cone untouched.
        let scaled: Vec<Polytope> = (0..5).map(|i| k0.scale(1.0 + 0.5f64.powi(i))).collect();
        let gaps = weak_convergence_probe(&scaled, &k0, &lambda, |u| u.x() * u.x()).unwrap();
        for g in &gaps {
            assert!(*g < 1e-9, "scale gap {g}");
        }

        // Mass is conserved regardless of the body.
        let ones = weak_convergence_probe(&scaled, &k0, &lambda, |_| 1.0).unwrap();
        for g in &ones {
            assert!(*g < 1e-9, "mass gap {g}");
        }

        // A radial bump at one vertex shrinks; the integrals converge.
        let mut values = vec![1.0; grid.len()];
        let bumped: Vec<Polytope> = (0..8)
            .map(|i| {
                values[0] = 1.0 + 0.25 * 0.5f64.powi(i);
                RadialField::new(grid.clone(), values.clone())
                    .unwrap()
                    .hull()
                    .unwrap()
                    .body
            })
            .collect();
        let gaps = weak_convergence_probe(&bumped, &k0, &lambda, |u| u.x() * u.x()).unwrap();
        assert!(gaps[7] < gaps[0], "gaps must shrink: {gaps:?}");
        assert!(gaps[7] < 1e-3, "late gap {}", gaps[7]);
    }
}
