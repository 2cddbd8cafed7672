//! Property-based tests: invariants that should survive arbitrary
//! (well-posed) inputs, not just the curated fixtures. Radial values are
//! drawn from ranges that keep hulls nondegenerate and the origin interior.

use std::sync::Arc;

use proptest::prelude::*;

use gaussim::body::{hausdorff_distance, RadialField};
use gaussim::entropy::ObjectiveContext;
use gaussim::gauss::gauss_image_measure;
use gaussim::measure::{
    check_even, check_not_hemisphere_concentrated, measure_norm, symmetrize_even, total_mass,
    AtomicMeasure, DensityField, Measure,
};
use gaussim::sphere::SphereGrid;
use gaussim::vec::Vec3;

fn grid(dim: usize, level: u32) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::build(dim, level).unwrap())
}

fn grid_atoms(g: &Arc<SphereGrid>, masses: Vec<f64>) -> Measure {
    Measure::Atomic(AtomicMeasure::new(g.dim, g.dirs.clone(), masses).unwrap())
}

fn radial_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.5f64..2.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Polarity swaps radial and reciprocal support functions, and applying
    /// it twice comes back to the body itself.
    #[test]
    fn polar_duality_round_trips(values in radial_values(32), angles in prop::collection::vec(0.0f64..std::f64::consts::TAU, 24)) {
        let g = grid(2, 2);
        let k = RadialField::new(g.clone(), values).unwrap().hull().unwrap().body;
        let ks = k.polar().unwrap();
        for t in angles {
            let u = Vec3::planar(t.cos(), t.sin());
            let rho = k.radial(&u).unwrap();
            let h = ks.support(&u);
            prop_assert!((rho * h - 1.0).abs() < 1e-9, "rho h = {}", rho * h);
        }
        let kss = ks.polar().unwrap();
        prop_assert!(hausdorff_distance(&kss, &k, &g.dirs) < 1e-9);
    }

    /// The image measure redistributes the source without creating or
    /// destroying mass, for any body the grid can represent.
    #[test]
    fn image_measure_conserves_mass(values in radial_values(32), density in prop::collection::vec(0.1f64..3.0, 32)) {
        let g = grid(2, 2);
        let k = RadialField::new(g.clone(), values).unwrap().hull().unwrap().body;
        let lambda = DensityField::new(g.clone(), density).unwrap();
        let gim = gauss_image_measure(&k, &lambda).unwrap();
        let total = total_mass(&Measure::Density(lambda)).unwrap();
        prop_assert!((gim.total() - total).abs() < 1e-9 * total.max(1.0));
    }

    /// Mean norms scale linearly, respect pointwise order, and approach
    /// the geometric mean as the exponent vanishes.
    #[test]
    fn mean_norms_behave(
        masses in prop::collection::vec(0.1f64..2.0, 32),
        f in prop::collection::vec(0.2f64..5.0, 32),
        bumps in prop::collection::vec(0.0f64..1.0, 32),
        c in 0.1f64..10.0,
    ) {
        let g = grid(2, 2);
        let m = grid_atoms(&g, masses);
        for p in [-2.0, -1.0, 1.0, 3.0, 0.0] {
            let base = measure_norm(&f, &m, p).unwrap();
            let scaled_f: Vec<f64> = f.iter().map(|v| c * v).collect();
            let scaled = measure_norm(&scaled_f, &m, p).unwrap();
            prop_assert!((scaled - c * base).abs() < 1e-12 * scaled.abs().max(1.0), "p = {p}");

            let bigger_f: Vec<f64> = f.iter().zip(&bumps).map(|(v, b)| v + b).collect();
            let bigger = measure_norm(&bigger_f, &m, p).unwrap();
            prop_assert!(bigger >= base - 1e-12, "p = {p}: {bigger} < {base}");
        }
        let near_zero = measure_norm(&f, &m, 1e-7).unwrap();
        let at_zero = measure_norm(&f, &m, 0.0).unwrap();
        prop_assert!((near_zero - at_zero).abs() < 1e-5 * at_zero);
    }

    /// The ascent objective is a function of the body alone, not of the
    /// scale of the radial field describing it.
    #[test]
    fn objective_ignores_scale(
        values in radial_values(32),
        masses in prop::collection::vec(0.2f64..2.0, 32),
        c in 0.05f64..20.0,
    ) {
        let g = grid(2, 2);
        let lambda = DensityField::lebesgue(g.clone());
        let mu = grid_atoms(&g, masses);
        let ctx = ObjectiveContext::new(lambda, &mu, 2.0).unwrap();
        let log_r: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let shifted: Vec<f64> = log_r.iter().map(|v| v + c.ln()).collect();
        let phi = ctx.phi(&log_r).unwrap();
        let phi_c = ctx.phi(&shifted).unwrap();
        prop_assert!((phi - phi_c).abs() < 1e-12, "{phi} vs {phi_c}");
    }

    /// Symmetrization lands in the even cone, keeps the total, and is a
    /// projection: applying it twice changes nothing.
    #[test]
    fn symmetrization_projects_onto_even_measures(masses in prop::collection::vec(0.0f64..2.0, 32)) {
        let g = grid(2, 2);
        // Guard against the all-zero draw, which has no mass to balance.
        let mut masses = masses;
        masses[0] += 0.1;
        let m = grid_atoms(&g, masses);
        let s = symmetrize_even(&m).unwrap();
        prop_assert!(check_even(&s, 1e-12));
        let t0 = total_mass(&m).unwrap();
        let t1 = total_mass(&s).unwrap();
        prop_assert!((t0 - t1).abs() < 1e-12 * t0);
        let ss = symmetrize_even(&s).unwrap();
        let (w1, w2) = (
            gaussim::measure::weights_on_grid(&s, &g).unwrap(),
            gaussim::measure::weights_on_grid(&ss, &g).unwrap(),
        );
        for (a, b) in w1.iter().zip(&w2) {
            prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    /// The hemisphere test must reject supports built inside a half-circle
    /// and accept supports that straddle every great circle; a returned
    /// witness must actually dominate the support.
    #[test]
    fn hemisphere_verdicts_match_construction(
        center in 0.0f64..std::f64::consts::TAU,
        spread in 0.1f64..1.4,
        offsets in prop::collection::vec(-1.0f64..1.0, 6),
        masses in prop::collection::vec(0.1f64..2.0, 6),
    ) {
        // Concentrated by construction: all atoms within `spread` of a ray.
        let dirs: Vec<Vec3> = offsets
            .iter()
            .map(|o| {
                let t = center + o * spread;
                Vec3::planar(t.cos(), t.sin())
            })
            .collect();
        let m = Measure::Atomic(AtomicMeasure::new(2, dirs.clone(), masses.clone()).unwrap());
        let verdict = check_not_hemisphere_concentrated(&m, 2.0).unwrap();
        prop_assert!(!verdict.ok);
        let w = verdict.witness.unwrap();
        for u in &dirs {
            prop_assert!(u.dot(&w) <= 1e-9, "witness fails to dominate an atom");
        }

        // Spread by construction: the same atoms plus their antipodes.
        let mut both = dirs;
        let flipped: Vec<Vec3> = both.iter().map(|u| u.scale(-1.0)).collect();
        both.extend(flipped);
        let mut mm = masses.clone();
        mm.extend(masses);
        let m = Measure::Atomic(AtomicMeasure::new(2, both, mm).unwrap());
        let verdict = check_not_hemisphere_concentrated(&m, 2.0).unwrap();
        prop_assert!(verdict.ok);
        prop_assert!(verdict.witness.is_none());
    }
}
