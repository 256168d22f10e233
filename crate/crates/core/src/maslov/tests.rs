use std::sync::Arc;

use nalgebra::DMatrix;

use super::*;
use crate::assembly::{BoundaryCondition, MatrixPotential};
use crate::geometry::{build_domain, build_mesh, BoundarySpec, TriMesh};
use crate::oracle::{default_steps, fd_branch_derivatives};

fn disc(h: f64) -> Arc<TriMesh<f64>> {
    let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 256)).unwrap();
    Arc::new(build_mesh(&d, h, 0).unwrap())
}

fn square(h: f64) -> Arc<TriMesh<f64>> {
    let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
    Arc::new(build_mesh(&d, h, 0).unwrap())
}

fn ground(problem: &FlowProblem<f64>) -> f64 {
    let op = problem.assemble(1.0).unwrap();
    lowest(&op, 1, &SolverOptions::default()).unwrap().values[0]
}

#[test]
fn free_disc_crossing_is_negative() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let mu = ground(&p);
    let lambda0 = mu / (0.7 * 0.7);
    let c = find_crossings(&p, lambda0, (0.5, 1.0), 16).unwrap();
    assert_eq!(c.len(), 1);
    assert!((c[0].t0 - 0.7).abs() < 1e-9, "{}", c[0].t0);
    let r = maslov_index(&p, lambda0, (0.5, 1.0), 16).unwrap();
    assert_eq!(r.index, -1);
    let form = r.crossings[0].form_matrix[0][0];
    assert!((form + 2.0 * lambda0).abs() < 1e-8 * lambda0, "{form}");
    assert_eq!(spectral_count(&p, lambda0, (0.5, 1.0)).unwrap(), 1);
}

#[test]
fn no_crossing_below_spectrum() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let r = maslov_index(&p, 1.0, (0.5, 1.0), 8).unwrap();
    assert_eq!(r.index, 0);
    assert!(r.crossings.is_empty());
}

#[test]
fn endpoint_rules() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let mu = ground(&p);
    let left = maslov_index(&p, mu / 0.25, (0.5, 0.7), 11).unwrap();
    assert_eq!(left.crossings.len(), 1);
    assert_eq!(left.crossings[0].position, Position::Left);
    assert_eq!(left.index, -1);
    assert_eq!(spectral_count(&p, mu / 0.25, (0.5, 0.7)).unwrap(), 1);
    let right = maslov_index(&p, mu, (0.5, 1.0), 11).unwrap();
    assert_eq!(right.crossings[0].position, Position::Right);
    assert_eq!(right.index, 0);
    assert_eq!(spectral_count(&p, mu, (0.5, 1.0)).unwrap(), 0);
}

#[test]
fn catenation_adds() {
    let p = FlowProblem::new(
        square(0.1),
        MatrixPotential::gaussian(5.0, [0.1, 0.05], 0.3),
        BoundaryCondition::Dirichlet,
    )
    .unwrap();
    let op = p.assemble(1.0).unwrap();
    let s = lowest(&op, 4, &SolverOptions::default()).unwrap();
    let lambda0 = 0.5 * (s.values[2] + s.values[3]) * 1.4;
    let whole = maslov_index(&p, lambda0, (0.5, 1.0), 16).unwrap();
    let a = maslov_index(&p, lambda0, (0.5, 0.77), 12).unwrap();
    let b = maslov_index(&p, lambda0, (0.77, 1.0), 12).unwrap();
    assert!(whole.index < 0);
    assert_eq!(whole.index, a.index + b.index);
    assert_eq!(-whole.index, spectral_count(&p, lambda0, (0.5, 1.0)).unwrap());
}

#[test]
fn form_matches_oracle_derivative() {
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::neumann(1)] {
        let p = FlowProblem::new(square(0.1), MatrixPotential::gaussian(4.0, [0.1, -0.1], 0.3), bc).unwrap();
        let t0 = 0.9;
        let op = p.assemble(t0).unwrap();
        let spec = lowest(&op, 3, &SolverOptions::default()).unwrap();
        let lambda0 = spec.values[0] / (t0 * t0);
        let cluster = crossing_cluster(&op, lambda0, &[0]).unwrap();
        let form = crossing_form(&p, &op, &cluster, lambda0, FormRoute::Mqq).unwrap();
        let fd = fd_branch_derivatives(&p, t0, 0..1, &default_steps(t0)).unwrap();
        let expect = t0 * fd.branches[0].d1;
        let got = form.matrix[(0, 0)];
        assert!((got - expect).abs() < 1e-4 * expect.abs(), "{got} {expect}");
    }
}

#[test]
fn boundary_route_on_disc() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let op = p.assemble(1.0).unwrap();
    let mu = ground(&p);
    let cluster = crossing_cluster(&op, mu, &[0]).unwrap();
    let b = crossing_form(&p, &op, &cluster, mu, FormRoute::Boundary).unwrap();
    let v = b.matrix[(0, 0)];
    assert!(v < 0.0);
    assert!((v + 2.0 * mu).abs() < 0.2 * 2.0 * mu, "{v} {mu}");

    let q = FlowProblem::new(square(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let op = q.assemble(1.0).unwrap();
    let mu = ground(&q);
    let cluster = crossing_cluster(&op, mu, &[0]).unwrap();
    assert!(matches!(
        crossing_form(&q, &op, &cluster, mu, FormRoute::Boundary),
        Err(Error::StrongTraceUnavailable(_))
    ));
}

#[test]
fn boundary_integrand_is_quadratic() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::gaussian(2.0, [0.2, 0.0], 0.4), BoundaryCondition::neumann(1))
        .unwrap();
    let op = p.assemble(0.8).unwrap();
    let n = op.ndof();
    let u = nalgebra::DVector::from_fn(n, |i, _| (0.37 * i as f64).sin());
    let v = nalgebra::DVector::from_fn(n, |i, _| (0.11 * i as f64).cos());
    let q = |x: &nalgebra::DVector<f64>| form::boundary_quadratic(&op, &p.potential, 3.0, x);
    let b = 0.25 * (q(&(&u + &v)) - q(&(&u - &v)));
    let lhs = q(&(&u + &v * 2.0));
    let rhs = q(&u) + 4.0 * q(&v) + 4.0 * b;
    assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0), "{lhs} {rhs}");
}

#[test]
fn rejects_non_crossings_and_degenerate_forms() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let op = p.assemble(1.0).unwrap();
    let mu = ground(&p);
    let cluster = crossing_cluster(&op, mu, &[0]).unwrap();
    assert!(matches!(
        crossing_form(&p, &op, &cluster, mu * 1.01, FormRoute::Mqq),
        Err(Error::NotACrossing(_))
    ));
    assert!(matches!(crossing_cluster(&op, mu * 1.3, &[0]), Err(Error::NotACrossing(_))));
    let f = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1e-12]);
    assert!(matches!(inertia_of_form(&f, 0.9), Err(Error::DegenerateCrossing { .. })));
    let f = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.5]);
    let (plus, minus, _) = inertia_of_form(&f, 0.9).unwrap();
    assert_eq!((plus, minus), (1, 1));
}

#[test]
fn result_serializes() {
    let p = FlowProblem::new(disc(0.1), MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
    let r = maslov_index(&p, 1.0, (0.5, 1.0), 8).unwrap();
    let json = serde_json::to_value(&r).unwrap();
    assert_eq!(json["index"], 0);
    assert_eq!(json["crossings"].as_array().unwrap().len(), 0);
}
