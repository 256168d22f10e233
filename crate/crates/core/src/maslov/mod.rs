//! Conjugate times of the scaling flow for a fixed `λ0`, the Maslov
//! crossing form at each of them, and the Maslov index of the path.

mod crossings;
mod form;

use serde::Serialize;

use crate::assembly::{potential_t_derivatives, AssembledOperator, FlowProblem};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectra::{form_cluster, lowest, EigenCluster, SolverOptions};

pub use crossings::{find_crossings, Crossing, CROSSING_TOL, MERGE_TOL};
pub use form::{check_kernel, crossing_form_boundary, crossing_form_mqq, inertia_of_form, FormMatrix};

/// Which formula evaluates the crossing form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FormRoute {
    #[default]
    Mqq,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Left,
    Interior,
    Right,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub t0: f64,
    pub dim: usize,
    pub form_matrix: Vec<Vec<f64>>,
    pub form_eigenvalues: Vec<f64>,
    pub n_plus: usize,
    pub n_minus: usize,
    pub signature: i64,
    /// contribution to the index after the endpoint rules
    pub contribution: i64,
    pub position: Position,
    pub asymmetry: f64,
    pub route: FormRoute,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaslovResult {
    pub interval: (f64, f64),
    pub lambda0: f64,
    pub crossings: Vec<CrossingReport>,
    pub index: i64,
}

/// The eigenvalue cluster of `(A(t0), M)` at `t0²λ0`.
pub fn crossing_cluster<T: Real>(op: &AssembledOperator<T>, lambda0: f64, branches: &[usize]) -> Result<EigenCluster<T>> {
    let top = branches.iter().copied().max().unwrap_or(0);
    let k = (top + 2).min(op.nfree());
    let spec = lowest(op, k, &SolverOptions::default())?;
    let t0 = op.t.to_f64_lossy();
    let target = t0 * t0 * lambda0;
    let tol = 1e-6 * target.abs().max(1.0);
    form_cluster(&spec, &op.m, op.t, T::lit(target), T::lit(tol)).map_err(|e| match e {
        Error::NoEigenvalueNear { tol, .. } => Error::NotACrossing(tol),
        other => other,
    })
}

/// Crossing-form matrix at a crossing by the chosen route.
pub fn crossing_form<T: Real>(
    problem: &FlowProblem<T>,
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    lambda0: f64,
    route: FormRoute,
) -> Result<FormMatrix<T>> {
    match route {
        FormRoute::Mqq => {
            let samples = potential_t_derivatives(&problem.potential, op.t, problem.quadrature_points(), false)?;
            crossing_form_mqq(op, cluster, T::lit(lambda0), &samples.first)
        }
        FormRoute::Boundary => crossing_form_boundary(op, cluster, T::lit(lambda0), &problem.potential),
    }
}

/// Maslov index of the path `t ↦ Υ(λ0, t)`, `t ∈ [a, b]`: interior
/// crossings contribute their signature, a crossing at `a` contributes
/// `−n₋` and one at `b` contributes `+n₊`.
pub fn maslov_index<T: Real>(
    problem: &FlowProblem<T>,
    lambda0: f64,
    interval: (f64, f64),
    grid_n: usize,
) -> Result<MaslovResult> {
    maslov_index_with(problem, lambda0, interval, grid_n, FormRoute::Mqq)
}

pub fn maslov_index_with<T: Real>(
    problem: &FlowProblem<T>,
    lambda0: f64,
    interval: (f64, f64),
    grid_n: usize,
    route: FormRoute,
) -> Result<MaslovResult> {
    let crossings = find_crossings(problem, lambda0, interval, grid_n)?;
    let mut reports = Vec::with_capacity(crossings.len());
    let mut index = 0i64;
    for c in &crossings {
        let op = problem.assemble(T::lit(c.t0))?;
        let cluster = crossing_cluster(&op, lambda0, &c.branches)?;
        let form = crossing_form(problem, &op, &cluster, lambda0, route)?;
        let (n_plus, n_minus, values) = inertia_of_form(&form.matrix, op.t)?;
        let position = if (c.t0 - interval.0).abs() <= MERGE_TOL {
            Position::Left
        } else if (c.t0 - interval.1).abs() <= MERGE_TOL {
            Position::Right
        } else {
            Position::Interior
        };
        let signature = n_plus as i64 - n_minus as i64;
        let contribution = match position {
            Position::Left => -(n_minus as i64),
            Position::Interior => signature,
            Position::Right => n_plus as i64,
        };
        index += contribution;
        reports.push(CrossingReport {
            t0: c.t0,
            dim: cluster.m,
            form_matrix: form
                .matrix
                .row_iter()
                .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
            form_eigenvalues: values.iter().map(|v| v.to_f64_lossy()).collect(),
            n_plus,
            n_minus,
            signature,
            contribution,
            position,
            asymmetry: form.asymmetry.to_f64_lossy(),
            route,
        });
    }
    Ok(MaslovResult {
        interval,
        lambda0,
        crossings: reports,
        index,
    })
}

/// Independent count for the Dirichlet sign law: the number of eigenvalues
/// on `Ω_b` strictly below `λ0` minus the number on `Ω_a`, by inertia.
pub fn spectral_count<T: Real>(problem: &FlowProblem<T>, lambda0: f64, interval: (f64, f64)) -> Result<i64> {
    let n = |t: f64| -> Result<i64> {
        let op = problem.assemble(T::lit(t))?;
        Ok(crossings::robust_count(&op, T::lit(t * t * lambda0))? as i64)
    };
    Ok(n(interval.1)? - n(interval.0)?)
}

#[cfg(test)]
mod tests;
