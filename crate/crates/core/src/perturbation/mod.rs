//! First- and second-order perturbation of an eigenvalue cluster along the
//! scaling flow: the operators `T⁽¹⁾`, `T⁽²⁾`, branch derivatives and the
//! two-term asymptotic expansion of the branches.

mod expansion;

use nalgebra::DMatrix;

use crate::assembly::{weighted_mass, AssembledOperator, PotentialSamples};
use crate::error::{Error, Result};
use crate::linalg::dense::{max_abs, symmetrize};
use crate::linalg::CsrMatrix;
use crate::scalar::Real;
use crate::spectra::{EigenCluster, ReducedResolvent, ResolventAction};

pub use expansion::{
    asymptotic_expansion, default_group_tol, first_derivatives, AsymptoticReport, BranchCoefficients,
    DerivativeReport, GroupReport, RouteTag,
};

/// How the resolvent terms of `T⁽²⁾` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum T2Form {
    /// `−(WU)ᵀS(WU)` with `W = M[V̇] − B_θ`
    Collapsed,
    /// the four terms `−V̇SV̇ − ΘSΘ + V̇SΘ + ΘSV̇` separately
    Expanded,
}

/// Load vectors of the cluster basis that enter `T⁽¹⁾` and `T⁽²⁾`.
#[derive(Debug, Clone)]
pub struct ClusterLoads<T: Real> {
    pub basis: DMatrix<T>,
    /// `M[V̇]U`
    pub vdot: DMatrix<T>,
    /// `B_θU`
    pub theta: DMatrix<T>,
    /// `UᵀM[V̈]U`, when second derivatives were sampled
    pub vddot_gram: Option<DMatrix<T>>,
}

impl<T: Real> ClusterLoads<T> {
    /// Loads from explicit matrices on the same (free) index set as `u`.
    pub fn from_matrices(
        u: &DMatrix<T>,
        vdot: &CsrMatrix<T>,
        theta: &CsrMatrix<T>,
        vddot: Option<&CsrMatrix<T>>,
    ) -> Self {
        let apply = |a: &CsrMatrix<T>| {
            DMatrix::from_columns(
                &(0..u.ncols())
                    .map(|j| a.mul_vec(&u.column(j).into_owned()))
                    .collect::<Vec<_>>(),
            )
        };
        Self {
            basis: u.clone(),
            vdot: apply(vdot),
            theta: apply(theta),
            vddot_gram: vddot.map(|a| u.transpose() * apply(a)),
        }
    }

    /// Loads for a cluster of the assembled operator, with `V̇` (and `V̈`)
    /// sampled at the quadrature points of the operator's mesh.
    pub fn new(op: &AssembledOperator<T>, cluster: &EigenCluster<T>, samples: &PotentialSamples<T>) -> Result<Self> {
        check_cluster(op, cluster)?;
        let mvdot = op.restrict_matrix(&weighted_mass(&op.mesh, op.ncomp, &samples.first)?);
        let theta = op.restrict_matrix(&op.boundary_form);
        let mvddot = match &samples.second {
            Some(s) => Some(op.restrict_matrix(&weighted_mass(&op.mesh, op.ncomp, s)?)),
            None => None,
        };
        Ok(Self::from_matrices(&cluster.u, &mvdot, &theta, mvddot.as_ref()))
    }

    /// `W U = (M[V̇] − B_θ)U`.
    pub fn w(&self) -> DMatrix<T> {
        &self.vdot - &self.theta
    }
}

fn check_cluster<T: Real>(op: &AssembledOperator<T>, cluster: &EigenCluster<T>) -> Result<()> {
    if cluster.u.nrows() != op.nfree() {
        return Err(Error::InvalidInput(format!(
            "cluster basis has {} rows, operator has {} free dofs",
            cluster.u.nrows(),
            op.nfree()
        )));
    }
    Ok(())
}

fn symmetric_checked<T: Real>(a: &DMatrix<T>, tol: T, what: &str) -> Result<DMatrix<T>> {
    let (s, asym) = symmetrize(a);
    if asym > tol * max_abs(a).max(T::one()) {
        return Err(Error::NotSelfadjoint(format!("{what}: asymmetry {:e}", asym.to_f64_lossy())));
    }
    Ok(s)
}

/// `T⁽¹⁾ = Uᵀ(M[V̇] − B_θ)U` from prepared loads.
pub fn t1_from_loads<T: Real>(loads: &ClusterLoads<T>) -> Result<DMatrix<T>> {
    symmetric_checked(&(loads.basis.transpose() * loads.w()), T::lit(1e-12), "T1")
}

/// `T⁽¹⁾` of a cluster, with `V̇` sampled at the operator's quadrature points.
pub fn build_t1<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    samples: &PotentialSamples<T>,
) -> Result<DMatrix<T>> {
    t1_from_loads(&ClusterLoads::new(op, cluster, samples)?)
}

/// `T⁽²⁾ = ½UᵀM[V̈]U − (WU)ᵀS(WU)` (or its expanded four-term form) for
/// any realization of the reduced resolvent `S`.
pub fn t2_from_loads<T: Real, R: ResolventAction<T>>(
    loads: &ClusterLoads<T>,
    s: &R,
    form: T2Form,
) -> Result<DMatrix<T>> {
    let g = loads
        .vddot_gram
        .as_ref()
        .ok_or_else(|| Error::MissingDerivative("second t-derivative of the potential was not sampled".into()))?;
    let m = loads.basis.ncols();
    let solve_all = |x: &DMatrix<T>| -> Result<DMatrix<T>> {
        let cols = (0..m).map(|j| s.apply(&x.column(j).into_owned())).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    };
    let resolvent_part = match form {
        T2Form::Collapsed => {
            let w = loads.w();
            w.transpose() * solve_all(&w)?
        }
        T2Form::Expanded => {
            let sv = solve_all(&loads.vdot)?;
            let sb = solve_all(&loads.theta)?;
            loads.vdot.transpose() * &sv + loads.theta.transpose() * &sb
                - loads.vdot.transpose() * &sb
                - loads.theta.transpose() * &sv
        }
    };
    let t2 = g * T::lit(0.5) - resolvent_part;
    symmetric_checked(&t2, T::lit(1e-10), "T2")
}

/// `T⁽²⁾` of a cluster of the assembled operator using the deflated solve.
pub fn build_t2<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    samples: &PotentialSamples<T>,
    form: T2Form,
) -> Result<DMatrix<T>> {
    let loads = ClusterLoads::new(op, cluster, samples)?;
    let s = ReducedResolvent::new(op, cluster)?;
    t2_from_loads(&loads, &s, form)
}
