use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{square_mesh, Verdict};
use crate::assembly::{BoundaryCondition, FlowProblem, MatrixPotential};
use crate::linalg::dense::{generalized_symmetric_eigen, max_abs};
use crate::linalg::CsrMatrix;
use crate::perturbation::{t2_from_loads, ClusterLoads, T2Form};
use crate::spectra::{
    form_cluster, lowest, projection_distance, riesz_projection, transformation_operator, DenseResolvent,
    RieszProjection, SolverOptions,
};

pub const PROJECTION_TOL: f64 = 1e-9;
/// `ratio(δ/2)/ratio(δ)` must lie in `1 ± LINEARITY_BAND`.
pub const LINEARITY_BAND: f64 = 0.1;
pub const T2_TOL: f64 = 1e-12;
pub const T2_CASES: usize = 100;

pub fn projection_identities() -> Verdict {
    let p = FlowProblem::new(
        square_mesh(0.1)?,
        MatrixPotential::gaussian(3.0, [0.1, -0.2], 0.3),
        BoundaryCondition::Dirichlet,
    )?;
    let op = p.assemble(1.0)?;
    let spec = lowest(&op, 5, &SolverOptions::default())?;
    let cluster = form_cluster(&spec, &op.m, 1.0, 0.5 * (spec.values[1] + spec.values[2]), 0.5)?;
    let proj = RieszProjection::of_cluster(&cluster);
    let mut defect = 0.0f64;
    let mut ratios = Vec::new();
    for delta in [1e-2, 5e-3, 2.5e-3] {
        let opt = p.assemble(1.0 + delta)?;
        let pt = riesz_projection(&opt, &cluster)?;
        let u = transformation_operator(&op.m, &proj, &pt)?;
        defect = defect.max(u.intertwining_defect()).max(u.inverse_defect());
        ratios.push(projection_distance(&op.m, &proj, &pt) / delta);
    }
    let linearity: Vec<f64> = ratios.windows(2).map(|r| r[1] / r[0]).collect();
    let linear = linearity.iter().all(|q| (q - 1.0).abs() <= LINEARITY_BAND);
    Ok((
        cluster.m == 2 && defect <= PROJECTION_TOL && linear,
        format!(
            "cluster of {}, max identity defect {defect:.2e} (tol {PROJECTION_TOL:e}); |P(t)−P|/δ = {ratios:.5?}, successive ratios {linearity:.4?} (1 ± {LINEARITY_BAND})",
            cluster.m
        ),
    ))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    (&a + a.transpose()) * 0.5
}

fn dense_to_csr(x: &DMatrix<f64>) -> CsrMatrix<f64> {
    let trips: Vec<_> = (0..x.nrows())
        .flat_map(|i| (0..x.ncols()).map(move |k| (i, k, x[(i, k)])))
        .collect();
    CsrMatrix::from_triplets(x.nrows(), x.ncols(), &trips)
}

pub fn t2_self_consistency(seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a2);
    let mut worst = 0.0f64;
    for _ in 0..T2_CASES {
        let n = rng.random_range(4..=30);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let m = &b * b.transpose() + DMatrix::identity(n, n) * (n as f64);
        let a = random_symmetric(&mut rng, n);
        let e = generalized_symmetric_eigen(&a, &m)?;
        let size = rng.random_range(1..=3);
        let first = rng.random_range(0..=n - size);
        let cluster: Vec<usize> = (first..first + size).collect();
        let lambda = cluster.iter().map(|&j| e.values[j]).sum::<f64>() / size as f64;
        let dense = DenseResolvent::new(&m, &e.values, &e.vectors, &cluster, lambda);
        let vdot = dense_to_csr(&random_symmetric(&mut rng, n));
        let theta = dense_to_csr(&random_symmetric(&mut rng, n));
        let vddot = dense_to_csr(&random_symmetric(&mut rng, n));
        let loads = ClusterLoads::from_matrices(dense.basis(), &vdot, &theta, Some(&vddot));
        let c = t2_from_loads(&loads, &dense, T2Form::Collapsed)?;
        let x = t2_from_loads(&loads, &dense, T2Form::Expanded)?;
        worst = worst.max(max_abs(&(&c - &x)) / max_abs(&c).max(1.0));
    }
    Ok((
        worst <= T2_TOL,
        format!("{T2_CASES} dense cases with n ≤ 30, max deviation {worst:.2e} (tol {T2_TOL:e})"),
    ))
}
