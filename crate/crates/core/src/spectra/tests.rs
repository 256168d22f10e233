use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;

use super::*;
use crate::assembly::{assemble, AssembledOperator, BoundaryCondition, FlowProblem, MatrixPotential};
use crate::error::Error;
use crate::geometry::{build_domain, build_mesh, BoundarySpec, TriMesh};

fn square(h: f64) -> Arc<TriMesh<f64>> {
    let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
    Arc::new(build_mesh(&d, h, 0).unwrap())
}

fn disc(h: f64) -> Arc<TriMesh<f64>> {
    let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 512)).unwrap();
    Arc::new(build_mesh(&d, h, 0).unwrap())
}

fn dirichlet(mesh: &Arc<TriMesh<f64>>, v: MatrixPotential<f64>, t: f64) -> AssembledOperator<f64> {
    assemble(mesh, &v, &BoundaryCondition::Dirichlet, t).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn square_dirichlet_lowest_four() {
    let op = dirichlet(&square(0.05), MatrixPotential::zero(1), 1.0);
    let spec = lowest(&op, 4, &SolverOptions::default()).unwrap();
    let exact = [2.0, 5.0, 5.0, 8.0].map(|c| c * PI * PI);
    for (v, e) in spec.values.iter().zip(exact) {
        assert!(rel(*v, e) < 0.02, "{v} vs {e}");
    }
    assert!(spec.residuals.iter().all(|r| *r <= 1e-8));
}

#[test]
fn disc_ground_state() {
    let op = dirichlet(&disc(0.05), MatrixPotential::zero(1), 1.0);
    let spec = lowest(&op, 2, &SolverOptions::default()).unwrap();
    assert!(rel(spec.values[0], 5.783_185_962_946_784) < 0.02, "{}", spec.values[0]);
}

#[test]
fn krylov_matches_dense_and_inertia() {
    let op = dirichlet(&square(0.1), MatrixPotential::linear([1.0, 0.3]), 0.8);
    let dense = solve_pencil(
        &op.a,
        &op.m,
        6,
        0.0,
        &SolverOptions {
            dense_threshold: usize::MAX,
            ..Default::default()
        },
    )
    .unwrap();
    let sparse = solve_pencil(
        &op.a,
        &op.m,
        6,
        0.0,
        &SolverOptions {
            dense_threshold: 0,
            ..Default::default()
        },
    )
    .unwrap();
    for (a, b) in dense.values.iter().zip(&sparse.values) {
        assert!(rel(*a, *b) < 1e-9, "{a} {b}");
    }
    let mid = 0.5 * (dense.values[2] + dense.values[3]);
    assert_eq!(count_below(&op.a, &op.m, mid).unwrap(), 3);
}

#[test]
fn identity_pencil_has_unit_spectrum() {
    let mesh = square(0.2);
    let op = dirichlet(&mesh, MatrixPotential::zero(1), 1.0);
    let spec = solve_pencil(&op.m, &op.m, 3, 0.5, &SolverOptions::default()).unwrap();
    assert!(spec.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn reproducible_with_seed() {
    let op = dirichlet(&square(0.1), MatrixPotential::zero(1), 1.0);
    let opts = SolverOptions {
        dense_threshold: 0,
        ..Default::default()
    };
    let a = solve_pencil(&op.a, &op.m, 3, 10.0, &opts).unwrap();
    let b = solve_pencil(&op.a, &op.m, 3, 10.0, &opts).unwrap();
    assert_eq!(a.values, b.values);
}

fn double_cluster(op: &AssembledOperator<f64>) -> (Spectrum<f64>, EigenCluster<f64>) {
    let spec = lowest(op, 5, &SolverOptions::default()).unwrap();
    let target = 0.5 * (spec.values[1] + spec.values[2]);
    let c = form_cluster(&spec, &op.m, op.t, target, 0.5).unwrap();
    (spec, c)
}

#[test]
fn degenerate_cluster_is_merged() {
    let op = dirichlet(&square(0.1), MatrixPotential::zero(1), 1.0);
    let (_, c) = double_cluster(&op);
    assert_eq!(c.m, 2);
    assert!(rel(c.lambda_big, 5.0 * PI * PI) < 0.05);
    assert!(c.orthonormality_defect(&op.m) < 1e-12);
    assert!(c.residual(&op) < 1e-9);
    let s = c.summary();
    assert_eq!(s.multiplicity, 2);
}

#[test]
fn cluster_errors() {
    let op = dirichlet(&square(0.1), MatrixPotential::zero(1), 1.0);
    let spec = lowest(&op, 4, &SolverOptions::default()).unwrap();
    assert!(matches!(
        form_cluster(&spec, &op.m, 1.0, 1.0, 1e-3),
        Err(Error::NoEigenvalueNear { .. })
    ));
    let gap = spec.values[1] - spec.values[0];
    assert!(matches!(
        form_cluster(&spec, &op.m, 1.0, spec.values[0], gap * 0.4),
        Err(Error::AmbiguousCluster { .. })
    ));
}

#[test]
fn reduced_resolvent_on_eigenvectors() {
    let op = dirichlet(&square(0.1), MatrixPotential::gaussian(3.0, [0.1, -0.2], 0.3), 0.9);
    let (spec, c) = double_cluster(&op);
    let s = ReducedResolvent::new(&op, &c).unwrap();
    let r = op.m.mul_vec(&c.u.column(0).into_owned());
    assert!(s.apply(&r).unwrap().amax() < 1e-14);
    for j in [0, 3, 4] {
        let v: DVector<f64> = spec.vectors.column(j).into_owned();
        let w = s.apply(&op.m.mul_vec(&v)).unwrap();
        let expect = &v / (spec.values[j] - c.lambda_big);
        assert!((&w - &expect).amax() <= 1e-8 * expect.amax(), "{}", (&w - &expect).amax());
        let rhs = s.deflate_load(&op.m.mul_vec(&v));
        assert!(s.residual(&w, &rhs) < 1e-10);
    }
    let ortho = c.u.transpose() * op.m.mul_vec(&s.apply(&DVector::from_element(op.nfree(), 1.0)).unwrap());
    assert!(ortho.amax() < 1e-10);
}

#[test]
fn resolvent_stalls_when_cluster_is_incomplete() {
    let op = dirichlet(&square(0.1), MatrixPotential::zero(1), 1.0);
    let spec = lowest(&op, 4, &SolverOptions::default()).unwrap();
    let mut c = form_cluster(&spec, &op.m, 1.0, 0.5 * (spec.values[1] + spec.values[2]), 0.5).unwrap();
    c.u = c.u.columns(0, 1).into_owned();
    c.m = 1;
    let s = ReducedResolvent::new(&op, &c).unwrap();
    let v = op.m.mul_vec(&DVector::from_element(op.nfree(), 1.0));
    let r = s.apply(&v);
    let v2 = op.m.mul_vec(&spec.vectors.column(2).into_owned());
    assert!(r.is_ok() || matches!(r, Err(Error::SingularSystem(_))));
    assert!(matches!(s.apply(&v2), Err(Error::SingularSystem(_))));
}

#[test]
fn riesz_projection_is_projection_and_moves_linearly() {
    let mesh = square(0.1);
    let problem = FlowProblem::new(
        mesh,
        MatrixPotential::gaussian(3.0, [0.1, -0.2], 0.3),
        BoundaryCondition::Dirichlet,
    )
    .unwrap();
    let op = problem.assemble(1.0).unwrap();
    let (_, c) = double_cluster(&op);
    let p = RieszProjection::of_cluster(&c);
    let mut dist = Vec::new();
    for dt in [1e-3, 2e-3] {
        let opt = problem.assemble(1.0 + dt).unwrap();
        let pt = riesz_projection(&opt, &c).unwrap();
        assert_eq!(pt.rank(), 2);
        assert!(pt.idempotency_defect(&opt.m) < 1e-12);
        assert!((pt.trace(&opt.m) - 2.0).abs() < 1e-12);
        dist.push(projection_distance(&op.m, &p, &pt));
    }
    let ratio = dist[1] / dist[0];
    assert!((ratio - 2.0).abs() < 0.05, "{ratio}");
}

#[test]
fn transformation_operator_intertwines() {
    let problem = FlowProblem::new(
        square(0.1),
        MatrixPotential::gaussian(3.0, [0.1, -0.2], 0.3),
        BoundaryCondition::Dirichlet,
    )
    .unwrap();
    let op = problem.assemble(1.0).unwrap();
    let (_, c) = double_cluster(&op);
    let p = RieszProjection::of_cluster(&c);

    let same = transformation_operator(&op.m, &p, &p).unwrap();
    let x = DVector::from_fn(op.nfree(), |i, _| (i as f64 * 0.37).sin());
    assert!((same.apply(&op.m, &x) - &x).amax() < 1e-10);

    let opt = problem.assemble(1.02).unwrap();
    let pt = riesz_projection(&opt, &c).unwrap();
    let u = transformation_operator(&op.m, &p, &pt).unwrap();
    assert!(u.intertwining_defect() <= 1e-9);
    assert!(u.inverse_defect() <= 1e-9);
    let back = u.apply_inverse(&op.m, &u.apply(&op.m, &x));
    assert!((back - &x).amax() < 1e-9 * x.amax());

    let (vals, asym) = similarity_eigenvalues(&opt, &p, &u).unwrap();
    assert!(asym < 1e-8 * vals[1].abs());
    for (a, b) in vals.iter().zip(&pt.values) {
        assert!(rel(*a, *b) < 1e-8, "{a} {b}");
    }
}

#[test]
fn laurent_expansion_of_resolvent() {
    let op = dirichlet(&square(0.1), MatrixPotential::gaussian(3.0, [0.1, -0.2], 0.3), 0.9);
    let (_, c) = double_cluster(&op);
    let x = DVector::from_fn(op.nfree(), |i, _| (i as f64 * 0.11).cos());
    let delta = 0.1 * c.gap;
    let (d1, b1) = resolvent_expansion_defect(&op, &c, delta, &x).unwrap();
    let (d2, _) = resolvent_expansion_defect(&op, &c, delta / 2.0, &x).unwrap();
    assert!(d1 <= b1, "{d1} {b1}");
    assert!((d2 / d1 - 0.125).abs() < 0.0125 * 2.0, "{}", d2 / d1);
}

#[test]
fn single_precision_solve() {
    let d = build_domain(&BoundarySpec::<f32>::centered_square(1.0)).unwrap();
    let mesh = Arc::new(build_mesh(&d, 0.2, 0).unwrap());
    let op = assemble(&mesh, &MatrixPotential::<f32>::zero(1), &BoundaryCondition::Dirichlet, 1.0).unwrap();
    let opts = SolverOptions {
        tol: 1e-5,
        fallback_tol: 1e-4,
        ..Default::default()
    };
    let spec = lowest(&op, 1, &opts).unwrap();
    assert!((spec.values[0] - 2.0 * std::f32::consts::PI.powi(2)).abs() / 20.0 < 0.1);
}
