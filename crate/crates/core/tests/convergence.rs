use std::sync::Arc;

use spectral_flow::oracle::{analytic_disc, analytic_square};
use spectral_flow::spectra::{lowest, SolverOptions};
use spectral_flow::{build_domain, build_mesh, BoundaryCondition, BoundarySpec, FlowProblem, MatrixPotential};

fn dirichlet_lowest(spec: &BoundarySpec, h: f64, count: usize) -> Vec<f64> {
    let mesh = Arc::new(build_mesh(&build_domain(spec).unwrap(), h, 0).unwrap());
    let p = FlowProblem::new(mesh, MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    lowest(&p.assemble(1.0).unwrap(), count, &SolverOptions::default()).unwrap().values
}

#[test]
fn disc_refinement_is_second_order() {
    let disc = BoundarySpec::disc(1.0, 256);
    let l: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| dirichlet_lowest(&disc, h, 1)[0]).collect();
    let order = ((l[0] - l[1]) / (l[1] - l[2])).log2();
    assert!(order >= 1.8, "observed order {order}");
    assert!(l.windows(2).all(|w| w[0] > w[1]), "not monotone: {l:?}");
    let exact = analytic_disc(1).lambda;
    assert!((l[2] - exact) / exact < 5e-4);
}

#[test]
fn square_lowest_six_match_analytic() {
    let got = dirichlet_lowest(&BoundarySpec::centered_square(1.0), 0.05, 6);
    let table = analytic_square(4);
    for (g, mode) in got.iter().zip(&table.modes) {
        assert!((g - mode.lambda) / mode.lambda < 0.02, "{g} vs {}", mode.lambda);
        assert!(*g > mode.lambda);
    }
}

#[test]
fn boundary_normals_point_outward() {
    for spec in [
        BoundarySpec::disc(1.0, 256),
        BoundarySpec::centered_square(1.0),
        BoundarySpec::centered_rectangle(0.8, 1.3),
    ] {
        let mesh = build_mesh(&build_domain(&spec).unwrap(), 0.1, 3).unwrap();
        for e in &mesh.boundary_edges {
            let m = e.midpoint(&mesh.nodes);
            assert!(e.normal[0] * m[0] + e.normal[1] * m[1] > 0.0);
        }
    }
}
