use std::sync::Arc;

use proptest::prelude::*;
use spectral_flow::geometry::scale_points;
use spectral_flow::{build_domain, build_mesh, BoundarySpec};

fn wobbly(a: f64, k: u32, phi: f64) -> BoundarySpec {
    BoundarySpec::Radial {
        profile: Arc::new(move |th: f64| 1.0 + a * (k as f64 * th + phi).cos()),
        samples: 256,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn meshes_of_star_domains_are_valid(a in 0.0..0.3f64, k in 2u32..6, phi in 0.0..6.28f64, seed in 0u64..4) {
        let domain = build_domain(&wobbly(a, k, phi)).unwrap();
        let mesh = build_mesh(&domain, 0.15, seed).unwrap();
        for e in &mesh.boundary_edges {
            let m = e.midpoint(&mesh.nodes);
            prop_assert!(e.normal[0] * m[0] + e.normal[1] * m[1] > 0.0);
        }
        for t in 0..mesh.triangles.len() {
            prop_assert!(mesh.triangle_area(t) > 0.0);
        }
        prop_assert!((mesh.area() - domain.area()).abs() <= 1e-10 * domain.area());
    }

    #[test]
    fn scaling_is_a_semigroup(s in 0.1..1.0f64, r in 0.1..1.0f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let p = vec![[x, y]];
        let twice = scale_points(&scale_points(&p, s), r);
        let once = scale_points(&p, s * r);
        prop_assert!((twice[0][0] - once[0][0]).abs() <= 1e-15 && (twice[0][1] - once[0][1]).abs() <= 1e-15);
    }
}
