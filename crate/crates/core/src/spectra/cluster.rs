use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::solver::Spectrum;
use crate::assembly::AssembledOperator;
use crate::error::{Error, Result};
use crate::linalg::dense::{m_orthonormalize, vec_amax};
use crate::linalg::CsrMatrix;
use crate::scalar::Real;

/// Default merge width `1e-6·max(1, |Λ|)`.
pub fn default_cluster_tol<T: Real>(lambda: T) -> T {
    T::lit(1e-6) * lambda.abs().max(T::one())
}

/// An isolated eigenvalue `Λ` of the pencil at `t0` with an `M`-orthonormal
/// basis of its eigenspace (free dofs).
#[derive(Debug, Clone)]
pub struct EigenCluster<T: Real> {
    pub t0: T,
    /// mean of the merged eigenvalues of the rescaled pencil
    pub lambda_big: T,
    /// `Λ / t0²`, the eigenvalue on the shrunken domain
    pub lambda_omega: T,
    pub m: usize,
    pub u: DMatrix<T>,
    /// individual eigenvalues merged into the cluster
    pub members: Vec<T>,
    pub cluster_tol: T,
    /// distance from `Λ` to the nearest eigenvalue outside the cluster
    pub gap: T,
}

/// Plain summary of a cluster for reports.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub t0: f64,
    pub lambda_big: f64,
    pub lambda_omega: f64,
    pub multiplicity: usize,
    pub members: Vec<f64>,
    pub gap: f64,
}

impl<T: Real> EigenCluster<T> {
    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            t0: self.t0.to_f64_lossy(),
            lambda_big: self.lambda_big.to_f64_lossy(),
            lambda_omega: self.lambda_omega.to_f64_lossy(),
            multiplicity: self.m,
            members: self.members.iter().map(|v| v.to_f64_lossy()).collect(),
            gap: self.gap.to_f64_lossy(),
        }
    }

    /// Cluster vectors extended by zero to all dofs.
    pub fn u_full(&self, op: &AssembledOperator<T>) -> DMatrix<T> {
        op.extend_columns(&self.u)
    }

    /// `‖UᵀMU − I‖_max`.
    pub fn orthonormality_defect(&self, m: &CsrMatrix<T>) -> T {
        let g = crate::linalg::dense::m_gram(m, &self.u, &self.u);
        let mut worst = T::zero();
        for i in 0..self.m {
            for j in 0..self.m {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Largest relative eigen-residual `‖AU_j − ΛMU_j‖/(‖A‖‖U_j‖)`.
    pub fn residual(&self, op: &AssembledOperator<T>) -> T {
        let scale = op.a.norm_inf();
        (0..self.m).fold(T::zero(), |acc, j| {
            let x: DVector<T> = self.u.column(j).into_owned();
            let r = op.a.mul_vec(&x) - op.m.mul_vec(&x) * self.lambda_big;
            acc.max(vec_amax(&r) / (scale * vec_amax(&x)))
        })
    }

    /// The same cluster expressed in another `M`-orthonormal basis `U·R`.
    pub fn rotated(&self, r: &DMatrix<T>) -> Self {
        let mut out = self.clone();
        out.u = &self.u * r;
        out
    }
}

/// Merges the eigenvalues within `cluster_tol` of `target` into a cluster.
///
/// The gap is measured to the nearest remaining eigenvalue in `pairs`, so
/// `pairs` must contain at least one eigenvalue outside the cluster.
pub fn form_cluster<T: Real>(
    pairs: &Spectrum<T>,
    m_mat: &CsrMatrix<T>,
    t0: T,
    target: T,
    cluster_tol: T,
) -> Result<EigenCluster<T>> {
    let inside: Vec<usize> = (0..pairs.len())
        .filter(|&i| (pairs.values[i] - target).abs() <= cluster_tol)
        .collect();
    if inside.is_empty() {
        return Err(Error::NoEigenvalueNear {
            target: target.to_f64_lossy(),
            tol: cluster_tol.to_f64_lossy(),
        });
    }
    let members: Vec<T> = inside.iter().map(|&i| pairs.values[i]).collect();
    let lambda_big = members.iter().copied().sum::<T>() / T::count(members.len());
    let gap = (0..pairs.len())
        .filter(|i| !inside.contains(i))
        .map(|i| (pairs.values[i] - lambda_big).abs())
        .fold(T::infinity(), T::min);
    if !gap.is_finite() {
        return Err(Error::InvalidInput(
            "cluster gap undetermined: no eigenvalue outside the cluster was supplied".into(),
        ));
    }
    if gap < T::lit(3.0) * cluster_tol {
        return Err(Error::AmbiguousCluster {
            target: target.to_f64_lossy(),
            gap: gap.to_f64_lossy(),
            tol: cluster_tol.to_f64_lossy(),
        });
    }
    let raw = DMatrix::from_columns(&inside.iter().map(|&i| pairs.vectors.column(i).into_owned()).collect::<Vec<_>>());
    let u = m_orthonormalize(m_mat, &raw)?;
    Ok(EigenCluster {
        t0,
        lambda_big,
        lambda_omega: lambda_big / (t0 * t0),
        m: inside.len(),
        u,
        members,
        cluster_tol,
        gap,
    })
}
