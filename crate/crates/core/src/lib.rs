//! Gauss image measures of convex bodies, and a variational solver for the
//! inverse problem of prescribing them.
//!
//! The library works with convex polytopes in dimensions 2 and 3 that contain
//! the origin in their interior. Given a body `K` and a spherical measure
//! `lambda`, the Gauss image measure transports `lambda` through the radial
//! Gauss map of `K`; its `p`-weighted variant multiplies by the `p`-th power
//! of the radial function. The solver recovers a body whose weighted Gauss
//! image measure matches a prescribed target by maximizing an entropy
//! functional over log-radial fields with projected gradient ascent.
//!
//! Module layout:
//! - [`sphere`]: spherical grids, Voronoi cells, caps, polygon clipping and
//!   quadrature on the unit sphere,
//! - [`measure`]: atomic and piecewise-constant spherical measures, norms,
//!   admissibility checks,
//! - [`body`]: polytopes, convex hulls, polar duality, Wulff shapes and
//!   `L_p` combinations,
//! - [`gauss`]: normal cones, the (reverse) radial Gauss map and the Gauss
//!   image measure itself,
//! - [`entropy`]: the entropy functionals, the ascent objective and its
//!   gradient,
//! - [`solver`]: the projected gradient ascent loop,
//! - [`verify`]: residual diagnostics, a Monge-Ampere consistency check and
//!   convergence probes,
//! - [`io`]: JSON/OBJ/CSV serialization of the above.

pub mod body;
pub mod dd;
pub mod entropy;
pub mod error;
pub mod gauss;
pub mod io;
pub mod measure;
pub mod par;
pub mod solver;
pub mod sphere;
pub mod vec;
pub mod verify;

pub use body::{Facet, Polytope, RadialField, RadialHull, SupportField};
pub use entropy::ObjectiveContext;
pub use error::{Error, Result};
pub use gauss::{GaussImageEntry, GaussImageMeasure, RegionPiece};
pub use measure::{AtomicMeasure, DensityField, HemisphereCheck, Measure};
pub use solver::{RoundtripReport, SolveOptions, SolveReport, SolveStatus};
pub use sphere::{Cap, SphereGrid, SphericalCell};
pub use vec::Vec3;
pub use verify::{CapResidual, MaResidualReport, ResidualReport};
