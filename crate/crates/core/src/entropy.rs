//! Entropy integrals of convex bodies against spherical measures, and the
//! ascent objective whose stationary points solve the prescription problem.
//!
//! Two integrals appear. The support entropy of a body `K` integrates
//! `-log h_K` against the source measure; the radial entropy integrates
//! `log rho_K`. They exchange under polarity — the radial entropy of the
//! polar body equals the support entropy of the original — and the module
//! computes them along *independent* decompositions (normal cones of the
//! vertices versus radial projections of the facets) so that agreement of
//! the two is a real consistency check rather than a tautology.
//!
//! Per piece the integrands are analytic: on the normal cone of a vertex
//! `v` the support function is exactly `<v, x>`, and on the radial region
//! of a facet with unit normal `n` and offset `d` the radial function is
//! exactly `d / <n, x>`. Clipping the regions against the grid cells (see
//! [`crate::gauss::region_pieces`]) therefore reduces everything to smooth
//! quadrature with the density constant on each piece.

use std::sync::Arc;

use crate::body::{Polytope, RadialField};
use crate::error::{Error, Result};
use crate::gauss::{self, RegionPiece};
use crate::measure::{self, DensityField, Measure};
use crate::par;
use crate::sphere::{self, SphereGrid, SphericalCell};
use crate::vec::Vec3;

/// Default per-piece quadrature refinement: sub-arc halvings in the plane,
/// subdivision depth of the projected triangle rule in space.
pub const DEFAULT_QUAD_DEPTH: u32 = 2;

fn piece_quad<F: Fn(&Vec3) -> f64 + Copy>(piece: &RegionPiece, depth: u32, f: F) -> f64 {
    match &piece.geom {
        SphericalCell::Arc { start, width } => {
            let max_piece = 0.3 / (1 << depth) as f64;
            sphere::arc_quad(*start, *width, max_piece, &|t| {
                f(&Vec3::planar(t.cos(), t.sin()))
            })
        }
        SphericalCell::Polygon { corners } => sphere::polygon_quad_proj(corners, depth, &f),
    }
}

/// Integral of `-log h_K` against the density, computed over the clipped
/// normal-cone decomposition. Requires the origin strictly inside.
pub fn entropy_g(body: &Polytope, lambda: &DensityField, quad_depth: u32) -> Result<f64> {
    if !body.origin_interior() {
        return Err(Error::OriginNotInterior(
            "the support entropy needs the origin strictly inside the body".into(),
        ));
    }
    let pieces = gauss::body_cone_pieces(body, &lambda.grid)?;
    let per_vertex = par::map_indexed(body.vertices.len(), |v| {
        let vert = body.vertices[v];
        par::sum_compensated(pieces[v].iter().map(|piece| {
            lambda.values[piece.cell]
                * piece_quad(piece, quad_depth, |x: &Vec3| -vert.dot(x).ln())
        }))
    });
    Ok(par::sum_compensated(per_vertex))
}

/// Integral of `log rho_K` against the density, computed over the clipped
/// facet radial projections. Requires the origin strictly inside.
pub fn entropy_e(body: &Polytope, lambda: &DensityField, quad_depth: u32) -> Result<f64> {
    if body.dim != lambda.grid.dim {
        return Err(Error::GridMismatch(format!(
            "body dimension {} vs grid dimension {}",
            body.dim, lambda.grid.dim
        )));
    }
    let regions = body.facet_radial_regions()?;
    let per_facet = par::map_indexed(body.facets.len(), |k| {
        let n = body.facets[k].normal;
        let d = body.facets[k].offset;
        let pieces = gauss::region_pieces(&regions[k], &lambda.grid);
        par::sum_compensated(pieces.iter().map(|piece| {
            lambda.values[piece.cell]
                * piece_quad(piece, quad_depth, |x: &Vec3| (d / n.dot(x)).ln())
        }))
    });
    Ok(par::sum_compensated(per_facet))
}

/// Derivative at `t = 0` of the support entropy along the harmonic family
/// `K +_p tL`: the family whose `(-p)`-th radial powers interpolate
/// linearly (geometrically for `p = 0`). Exact for polytope data whose
/// radial functions the family moves smoothly.
pub fn harmonic_derivative(
    k: &Polytope,
    l: &Polytope,
    lambda: &DensityField,
    p: f64,
) -> Result<f64> {
    if !k.origin_interior() || !l.origin_interior() {
        return Err(Error::OriginNotInterior(
            "the harmonic derivative needs the origin inside both bodies".into(),
        ));
    }
    let pieces = gauss::body_cone_pieces(k, &lambda.grid)?;
    let per_vertex = par::map_indexed(k.vertices.len(), |v| {
        let cone_mass = gauss::pieces_mass(&pieces[v], &lambda.values);
        let rk = k.vertices[v].norm();
        let u = k.vertices[v].scale(1.0 / rk);
        let rl = l.radial(&u).unwrap_or(f64::NAN);
        if p == 0.0 {
            -rl.ln() * cone_mass
        } else {
            (1.0 / p) * rl.powf(-p) * rk.powf(p) * cone_mass
        }
    });
    let total = par::sum_compensated(per_vertex);
    if !total.is_finite() {
        return Err(Error::Domain(
            "harmonic derivative hit a nonpositive radial value".into(),
        ));
    }
    Ok(total)
}

/// Precomputed state for evaluating the ascent objective and its gradient
/// over log-radial fields on a fixed grid.
///
/// The objective of a field `f` is the normalized support entropy of the
/// hull of `f`, measured relative to the hull of the constant field `1` and
/// combined with the `(-p)`-mean of `f` against the target:
/// `phi(f) = (G(<f>) - G(<1>)) / |lambda| + log ||f : mu||_{-p}`.
/// Subtracting the baseline makes constants exact zeros of `phi`, and both
/// terms shift oppositely under scaling, so `phi` is scale-invariant.
///
/// The normalizer `|lambda|` is taken as the sum of the clipped cone
/// masses of the evaluation itself rather than the analytic total. The two
/// agree to clipping accuracy, but using the evaluation's own total makes
/// the scale shifts cancel structurally (the quadrature integrates
/// constants exactly piece by piece) instead of only up to the clipping
/// defect, and it makes the gradient sum to zero identically.
pub struct ObjectiveContext {
    grid: Arc<SphereGrid>,
    lambda: DensityField,
    mu_weights: Vec<f64>,
    p: f64,
    quad_depth: u32,
    lam_total: f64,
    mu_total: f64,
    baseline_g: f64,
}

impl ObjectiveContext {
    pub fn new(lambda: DensityField, mu: &Measure, p: f64) -> Result<ObjectiveContext> {
        ObjectiveContext::with_quad_depth(lambda, mu, p, DEFAULT_QUAD_DEPTH)
    }

    pub fn with_quad_depth(
        lambda: DensityField,
        mu: &Measure,
        p: f64,
        quad_depth: u32,
    ) -> Result<ObjectiveContext> {
        if p == 0.0 {
            return Err(Error::Admissibility("p must be nonzero".into()));
        }
        let grid = lambda.grid.clone();
        let mu_weights = measure::weights_on_grid(mu, &grid)?;
        let lam_total = measure::total_mass(&Measure::Density(lambda.clone()))?;
        let mu_total = measure::total_mass(mu)?;
        let ball = RadialField::constant(grid.clone(), 1.0)?.hull()?;
        let baseline_g = entropy_g(&ball.body, &lambda, quad_depth)?;
        Ok(ObjectiveContext {
            grid,
            lambda,
            mu_weights,
            p,
            quad_depth,
            lam_total,
            mu_total,
            baseline_g,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn lambda(&self) -> &DensityField {
        &self.lambda
    }

    pub fn mu_weights(&self) -> &[f64] {
        &self.mu_weights
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda_total(&self) -> f64 {
        self.lam_total
    }

    pub fn mu_total(&self) -> f64 {
        self.mu_total
    }

    fn radial_hull(&self, log_r: &[f64]) -> Result<crate::body::RadialHull> {
        if log_r.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} log-radial values on a {}-direction grid",
                log_r.len(),
                self.grid.len()
            )));
        }
        let values: Vec<f64> = log_r.iter().map(|t| t.exp()).collect();
        RadialField::new(self.grid.clone(), values)?.hull()
    }

    /// Support entropy, per-sample cone masses and their total, all from
    /// one walk over the clipped pieces.
    fn eval_g(&self, hull: &crate::body::RadialHull) -> Result<(f64, Vec<f64>, f64)> {
        let body = &hull.body;
        let pieces = gauss::body_cone_pieces(body, &self.grid)?;
        let per_vertex: Vec<(f64, f64)> = par::map_indexed(body.vertices.len(), |v| {
            let vert = body.vertices[v];
            let mass = gauss::pieces_mass(&pieces[v], &self.lambda.values);
            let g = par::sum_compensated(pieces[v].iter().map(|piece| {
                self.lambda.values[piece.cell]
                    * piece_quad(piece, self.quad_depth, |x: &Vec3| -vert.dot(x).ln())
            }));
            (mass, g)
        });
        let g_total = par::sum_compensated(per_vertex.iter().map(|(_, g)| *g));
        let lam_quad = par::sum_compensated(per_vertex.iter().map(|(m, _)| *m));
        let mut masses = vec![0.0; self.grid.len()];
        for (v, &(mass, _)) in per_vertex.iter().enumerate() {
            masses[hull.sample_of_vertex[v]] = mass;
        }
        Ok((g_total, masses, lam_quad))
    }

    /// `- (1/p) log( sum_i mu_i f_i^{-p} / |mu| )` and the per-direction
    /// summands `mu_i f_i^{-p}`.
    fn norm_term(&self, log_r: &[f64]) -> (f64, Vec<f64>, f64) {
        let summands: Vec<f64> = self
            .mu_weights
            .iter()
            .zip(log_r)
            .map(|(m, t)| m * (-self.p * t).exp())
            .collect();
        let s = par::sum_compensated(summands.iter().copied());
        let term = -(1.0 / self.p) * (s / self.mu_total).ln();
        (term, summands, s)
    }

    /// Objective value at a log-radial field.
    pub fn phi(&self, log_r: &[f64]) -> Result<f64> {
        let hull = self.radial_hull(log_r)?;
        let (g, _, lam_quad) = self.eval_g(&hull)?;
        let (norm, _, _) = self.norm_term(log_r);
        Ok((g - self.baseline_g) / lam_quad + norm)
    }

    /// Objective value, gradient in the log-radial coordinates, and the
    /// source measure of each sample's normal cone (zero for samples
    /// absorbed into the hull of the others).
    ///
    /// The gradient at sample `i` is
    /// `-cone_mass_i / |lambda| + mu_i f_i^{-p} / sum_j mu_j f_j^{-p}`;
    /// the cone masses come from the same clipped pieces the entropy
    /// quadrature walks, which keeps the two sides of the comparison
    /// consistent to rounding error.
    pub fn phi_and_gradient(&self, log_r: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let hull = self.radial_hull(log_r)?;
        let (g_total, masses, lam_quad) = self.eval_g(&hull)?;
        let (norm, summands, s) = self.norm_term(log_r);
        let phi = (g_total - self.baseline_g) / lam_quad + norm;
        let grad: Vec<f64> = masses
            .iter()
            .zip(&summands)
            .map(|(mass, q)| -mass / lam_quad + q / s)
            .collect();
        Ok((phi, grad, masses))
    }

    /// Gradient only.
    pub fn phi_gradient(&self, log_r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.phi_and_gradient(log_r)?.1)
    }
}
