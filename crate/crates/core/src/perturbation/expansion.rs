use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dense::symmetric_eigen;
use crate::scalar::Real;
use crate::spectra::EigenCluster;

/// Which formula produced a reported quantity.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RouteTag {
    pub quantity: String,
    pub route: String,
}

fn tag(quantity: &str, route: &str) -> RouteTag {
    RouteTag {
        quantity: quantity.into(),
        route: route.into(),
    }
}

/// First derivatives of the branches emanating from a cluster.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeReport {
    pub t0: f64,
    /// eigenvalue of the rescaled pencil, `t0²λ`
    pub lambda_big: f64,
    /// `λ(t0)` on the shrunken domain
    pub lambda_omega: f64,
    pub multiplicity: usize,
    /// eigenvalues of `T⁽¹⁾`, ascending
    pub lambda1: Vec<f64>,
    /// `λ′_j(t0) = (λ⁽¹⁾_j − 2t0λ)/t0²`
    pub dlam: Vec<f64>,
    /// `T⁽¹⁾`-eigenbasis, one column per branch, free-dof coordinates
    #[serde(skip)]
    pub basis: DMatrix<f64>,
    /// `t0·λ′_j` from the crossing form, when evaluated
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing_form: Option<Vec<f64>>,
    /// `t0·λ′_j` from the boundary integral, when evaluated
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_integral: Option<Vec<f64>>,
    /// `λ′_j` from finite differences of the discrete branches
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<f64>>,
    pub route_tags: Vec<RouteTag>,
}

impl DerivativeReport {
    /// Branch eigenvectors as rows of nodal values (free dofs).
    pub fn basis_vectors(&self) -> Vec<Vec<f64>> {
        self.basis.column_iter().map(|c| c.iter().copied().collect()).collect()
    }
}

/// Diagonalizes `T⁽¹⁾` and applies the first-derivative formula.
pub fn first_derivatives<T: Real>(cluster: &EigenCluster<T>, t1: &DMatrix<T>) -> DerivativeReport {
    let e = symmetric_eigen(t1);
    let t0 = cluster.t0;
    let lam = cluster.lambda_omega;
    let dlam = e
        .values
        .iter()
        .map(|&l1| ((l1 - T::lit(2.0) * t0 * lam) / (t0 * t0)).to_f64_lossy())
        .collect();
    let basis = (&cluster.u * &e.vectors).map(|v| v.to_f64_lossy());
    DerivativeReport {
        t0: t0.to_f64_lossy(),
        lambda_big: cluster.lambda_big.to_f64_lossy(),
        lambda_omega: lam.to_f64_lossy(),
        multiplicity: cluster.m,
        lambda1: e.values.iter().map(|v| v.to_f64_lossy()).collect(),
        dlam,
        basis,
        crossing_form: None,
        boundary_integral: None,
        oracle: None,
        route_tags: vec![tag("lambda1", "T1 spectrum"), tag("dlam", "first-derivative formula")],
    }
}

/// Default grouping width `1e-5·max(1, |Λ|)` for equal `λ⁽¹⁾`.
pub fn default_group_tol<T: Real>(lambda_big: T) -> T {
    T::lit(1e-5) * lambda_big.abs().max(T::one())
}

/// One group of equal first-order coefficients.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub lambda1: f64,
    pub multiplicity: usize,
    /// eigenvalues of `P_i⁽¹⁾T⁽²⁾P_i⁽¹⁾`, ascending
    pub lambda2: Vec<f64>,
}

/// `λ(t) ≈ λ(t0) + a1(t − t0) + a2(t − t0)²` for one branch.
#[derive(Debug, Clone, Serialize)]
pub struct BranchCoefficients {
    pub group: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub a1: f64,
    pub a2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub t0: f64,
    pub lambda_omega: f64,
    pub group_tol: f64,
    pub groups: Vec<GroupReport>,
    /// ordered by group, then by `λ⁽²⁾`
    pub branches: Vec<BranchCoefficients>,
}

/// Groups the spectrum of `T⁽¹⁾`, diagonalizes `T⁽²⁾` on each group and
/// returns the two-term expansion coefficients of every branch.
pub fn asymptotic_expansion<T: Real>(
    cluster: &EigenCluster<T>,
    t1: &DMatrix<T>,
    t2: &DMatrix<T>,
    group_tol: T,
) -> Result<AsymptoticReport> {
    let e = symmetric_eigen(t1);
    let m = e.values.len();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for j in 0..m {
        match groups.last_mut() {
            Some(g) if e.values[j] - e.values[*g.last().unwrap()] <= group_tol => g.push(j),
            _ => groups.push(vec![j]),
        }
    }
    for w in groups.windows(2) {
        let gap = e.values[w[1][0]] - e.values[*w[0].last().unwrap()];
        if gap < T::lit(3.0) * group_tol {
            return Err(Error::GroupingUnstable {
                gap: gap.to_f64_lossy(),
                tol: group_tol.to_f64_lossy(),
            });
        }
    }
    let t0 = cluster.t0;
    let lam = cluster.lambda_omega;
    let two = T::lit(2.0);
    let mut reports = Vec::new();
    let mut branches = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let l1 = g.iter().map(|&j| e.values[j]).sum::<T>() / T::count(g.len());
        let q = DMatrix::from_columns(&g.iter().map(|&j| e.vectors.column(j).into_owned()).collect::<Vec<_>>());
        let block = q.transpose() * t2 * &q;
        let block = (&block + block.transpose()) * T::lit(0.5);
        let l2 = symmetric_eigen(&block).values;
        let a1 = l1 / (t0 * t0) - two * lam / t0;
        for &v in &l2 {
            let a2 = v / (t0 * t0) - two * l1 / (t0 * t0 * t0) + T::lit(3.0) * lam / (t0 * t0);
            branches.push(BranchCoefficients {
                group: gi,
                lambda1: l1.to_f64_lossy(),
                lambda2: v.to_f64_lossy(),
                a1: a1.to_f64_lossy(),
                a2: a2.to_f64_lossy(),
            });
        }
        reports.push(GroupReport {
            lambda1: l1.to_f64_lossy(),
            multiplicity: g.len(),
            lambda2: l2.iter().map(|v| v.to_f64_lossy()).collect(),
        });
    }
    Ok(AsymptoticReport {
        t0: t0.to_f64_lossy(),
        lambda_omega: lam.to_f64_lossy(),
        group_tol: group_tol.to_f64_lossy(),
        groups: reports,
        branches,
    })
}
