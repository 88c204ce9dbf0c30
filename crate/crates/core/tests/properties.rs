use std::sync::Arc;

use phplate::assembly::{apply_essential_bcs, assemble_system, FieldKind, Scheme};
use phplate::linalg::{lu_factor, TripletBuilder};
use phplate::manufactured::convergence_rates;
use phplate::mesh::{build_rect_grid, build_tri_grid, Diagonal, Mesh};
use phplate::quadrature::{quad_rule, ReferenceCell};
use phplate::timeint::{integrate_matrices, IntegrationOptions, Unforced};
use proptest::prelude::*;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop_oneof![Just(Scheme::Bjt), Just(Scheme::Afw), Just(Scheme::Hhj)]
}

fn diagonal_strategy() -> impl Strategy<Value = Diagonal> {
    prop_oneof![Just(Diagonal::Right), Just(Diagonal::Left), Just(Diagonal::Crossed)]
}

fn mesh_for(scheme: Scheme, n: usize, diagonal: Diagonal) -> Arc<Mesh> {
    Arc::new(match scheme {
        Scheme::Bjt => build_rect_grid(n).unwrap(),
        _ => build_tri_grid(n, diagonal).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triangle_rules_integrate_monomials(a in 0usize..10, b in 0usize..10) {
        let rule = quad_rule(ReferenceCell::Triangle, a + b).unwrap();
        let q: f64 = rule.iter().map(|(x, w)| w * x[0].powi(a as i32) * x[1].powi(b as i32)).sum();
        let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
        prop_assert!((q - exact).abs() <= 1e-14 * exact.max(1e-300) + 1e-18);
    }

    #[test]
    fn meshes_are_consistent(n in 1usize..7, diagonal in diagonal_strategy(), rect in any::<bool>()) {
        let mesh = if rect { build_rect_grid(n).unwrap() } else { build_tri_grid(n, diagonal).unwrap() };
        // Euler characteristic of a disc.
        prop_assert_eq!(mesh.num_vertices() + mesh.num_cells(), mesh.num_edges() + 1);
        let area: f64 = (0..mesh.num_cells()).map(|c| mesh.signed_area(c)).sum();
        prop_assert!((area - 1.0).abs() < 1e-13);
        prop_assert!((0..mesh.num_cells()).all(|c| mesh.signed_area(c) > 0.0));
        let boundary = mesh.edges().iter().filter(|e| e.boundary).count();
        prop_assert_eq!(boundary, 4 * n);
    }

    #[test]
    fn assembled_structure_holds(scheme in scheme_strategy(), degree in 1usize..=3, n in 1usize..=3, diagonal in diagonal_strategy()) {
        let system = assemble_system(scheme, mesh_for(scheme, n, diagonal), degree, &scheme.default_params()).unwrap();
        let system = apply_essential_bcs(system);
        let report = system.structure_report();
        prop_assert!(report.mass_symmetry <= 1e-12);
        prop_assert!(report.structure_skewness <= 1e-12);
        let inertia = system.mass_inertia().unwrap();
        prop_assert_eq!(inertia.zero, 0);
        prop_assert_eq!(inertia.negative, system.free_count(FieldKind::Multiplier));
    }

    #[test]
    fn unforced_energy_is_conserved(scheme in scheme_strategy(), degree in 1usize..=2, seed in 0u64..1000) {
        let system = apply_essential_bcs(
            assemble_system(scheme, mesh_for(scheme, 2, Diagonal::Right), degree, &scheme.default_params()).unwrap(),
        );
        let e0: Vec<f64> = (0..system.dim()).map(|i| ((i as u64 * 7919 + seed) % 97) as f64 / 97.0 - 0.5).collect();
        let options = IntegrationOptions { dt: 0.05, final_time: 1.0, store_states: false };
        let traj = integrate_matrices(system.mass(), system.structure(), e0, &Unforced { dim: system.dim() }, &options, &mut |_, _, _| Ok(())).unwrap();
        let scale = traj.energy.iter().fold(0.0f64, |m, h| m.max(h.abs()));
        let drift = (traj.energy.last().unwrap() - traj.energy[0]).abs();
        prop_assert!(drift <= 1e-9 * scale);
    }

    #[test]
    fn power_laws_give_their_exponent(c in 0.1f64..10.0, p in 0.5f64..4.0, levels in 2usize..6) {
        let data: Vec<(f64, f64)> = (0..levels).map(|i| {
            let h = 0.5f64.powi(i as i32 + 1);
            (h, c * h.powf(p))
        }).collect();
        let r = convergence_rates(&data).unwrap();
        prop_assert!((r.fitted - p).abs() < 1e-9);
        prop_assert!(r.successive.iter().all(|s| (s - p).abs() < 1e-9));
    }

    #[test]
    fn lu_solves_diagonally_dominant_systems(n in 2usize..40, seed in 0u64..500) {
        let mut t = TripletBuilder::new(n, n);
        let mut next = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut rand = move || {
            next = next.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((next >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            t.push(i, i, 4.0 + rand());
            for _ in 0..3 {
                let j = ((rand() + 0.5) * n as f64) as usize % n;
                t.push(i, j, rand());
            }
        }
        let a = t.build();
        let b: Vec<f64> = (0..n).map(|_| rand()).collect();
        let f = lu_factor(&a).unwrap();
        let (_, residual) = f.solve_checked(&a, &b, 1e-12).unwrap();
        prop_assert!(residual <= 1e-12);
    }
}
