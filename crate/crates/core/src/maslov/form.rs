use nalgebra::{DMatrix, DVector};

use crate::assembly::{quadrature_points, traces, weighted_mass, AssembledOperator, MatrixPotential};
use crate::error::{Error, Result};
use crate::linalg::dense::{max_abs, symmetrize};
use crate::scalar::{dot2, Real};
use crate::spectra::EigenCluster;

/// Symmetrized crossing-form matrix with the asymmetry of the raw one.
#[derive(Debug, Clone)]
pub struct FormMatrix<T: Real> {
    pub matrix: DMatrix<T>,
    pub asymmetry: T,
}

fn kernel_residual<T: Real>(op: &AssembledOperator<T>, cluster: &EigenCluster<T>, lambda_big: T) -> T {
    let scale = op.a.norm_inf() + lambda_big.abs() * op.m.norm_inf();
    (0..cluster.m).fold(T::zero(), |acc, j| {
        let u: DVector<T> = cluster.u.column(j).into_owned();
        let r = op.a.mul_vec(&u) - op.m.mul_vec(&u) * lambda_big;
        let un = u.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        acc.max(r.iter().fold(T::zero(), |a, v| a.max(v.abs())) / (scale * un))
    })
}

/// Checks that the cluster spans the kernel of `A(t0) − t0²λ0·M`.
pub fn check_kernel<T: Real>(op: &AssembledOperator<T>, cluster: &EigenCluster<T>, lambda0: T) -> Result<()> {
    let res = kernel_residual(op, cluster, op.t * op.t * lambda0);
    if res > T::lit(1e-8).max(T::lit(1e3) * T::EPS) {
        return Err(Error::NotACrossing(res.to_f64_lossy()));
    }
    Ok(())
}

/// Crossing form through the interior route:
/// `𝔪(q_j, q_k) = (1/t0)·u_jᵀM[V̇ − 2t0λ0]u_k − (1/t0²)·⟨γ_N u_j, γ_D u_k⟩`,
/// with `V̇` sampled at the quadrature points of the operator's mesh and the
/// weak Neumann trace taken from the discrete residual.
pub fn crossing_form_mqq<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    lambda0: T,
    vdot: &[DMatrix<T>],
) -> Result<FormMatrix<T>> {
    check_kernel(op, cluster, lambda0)?;
    let t0 = op.t;
    let n = op.ncomp;
    let shift = T::lit(2.0) * t0 * lambda0;
    let shifted: Vec<DMatrix<T>> = vdot.iter().map(|v| v - DMatrix::identity(n, n) * shift).collect();
    if shifted.len() != quadrature_points(&op.mesh).len() {
        return Err(Error::InvalidInput("V̇ samples do not match the quadrature points".into()));
    }
    let w = weighted_mass(&op.mesh, n, &shifted)?;
    let u = cluster.u_full(op);
    let m = cluster.m;
    let big = t0 * t0 * lambda0;
    let tr: Vec<_> = (0..m).map(|j| traces(op, &u.column(j).into_owned(), big)).collect();
    let mut raw = DMatrix::zeros(m, m);
    for j in 0..m {
        let uj: DVector<T> = u.column(j).into_owned();
        let wu = w.mul_vec(&uj);
        for k in 0..m {
            let interior = wu.dot(&u.column(k)) / t0;
            raw[(j, k)] = interior - tr[j].pair(&tr[k]) / (t0 * t0);
        }
    }
    let (matrix, asymmetry) = symmetrize(&raw);
    Ok(FormMatrix { matrix, asymmetry })
}

/// The boundary integrand of the crossing form for the nodal function `u`,
/// integrated over all boundary edges:
/// `(1/t0²)∫[|∇u|²(ν·x) − 2(∇u·x)·∂_νu − ∂_νu·u + t0²uᵀ(V(t0x) − λ0)u(ν·x)]`,
/// with element gradients and the 2-point Gauss rule per edge.
pub(crate) fn boundary_quadratic<T: Real>(
    op: &AssembledOperator<T>,
    potential: &MatrixPotential<T>,
    lambda0: T,
    u: &DVector<T>,
) -> T {
    let t0 = op.t;
    let n = op.ncomp;
    let mesh = &op.mesh;
    let tr = traces(op, u, t0 * t0 * lambda0);
    let g = T::lit(0.5 / 3f64.sqrt());
    let gauss = [T::lit(0.5) - g, T::lit(0.5) + g];
    let half = T::lit(0.5);
    let mut total = T::zero();
    for (e, edge) in mesh.boundary_edges.iter().enumerate() {
        let (a, b) = (mesh.nodes[edge.nodes[0]], mesh.nodes[edge.nodes[1]]);
        let nu = edge.normal;
        let nx = dot2(nu, a);
        let mut sum = T::zero();
        for &s in &gauss {
            let x = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
            let uval: DVector<T> = DVector::from_fn(n, |c, _| {
                (T::one() - s) * u[edge.nodes[0] * n + c] + s * u[edge.nodes[1] * n + c]
            });
            let mut pt = T::zero();
            for c in 0..n {
                let grad = tr.edge_gradients[e * n + c];
                let dn = tr.strong_neumann[e * n + c];
                pt += dot2(grad, grad) * nx - T::lit(2.0) * dot2(grad, x) * dn - dn * uval[c];
            }
            let v = potential.value([t0 * x[0], t0 * x[1]]) - DMatrix::identity(n, n) * lambda0;
            pt += (v * &uval).dot(&uval) * (t0 * t0) * nx;
            sum += pt * half;
        }
        total += sum * edge.length;
    }
    total / (t0 * t0)
}

/// Crossing form through the boundary integral, off-diagonal entries by
/// polarization `¼[Q(u_j + u_k) − Q(u_j − u_k)]`.
///
/// Strong Neumann traces from element gradients are only meaningful when the
/// mesh boundary samples a smooth profile.
pub fn crossing_form_boundary<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    lambda0: T,
    potential: &MatrixPotential<T>,
) -> Result<FormMatrix<T>> {
    if !op.mesh.smooth_boundary {
        return Err(Error::StrongTraceUnavailable(
            "boundary is a genuine polygon; pointwise normal derivatives are singular at corners".into(),
        ));
    }
    check_kernel(op, cluster, lambda0)?;
    let u = cluster.u_full(op);
    let m = cluster.m;
    let q = |x: &DVector<T>| boundary_quadratic(op, potential, lambda0, x);
    let mut raw = DMatrix::zeros(m, m);
    let quarter = T::lit(0.25);
    for j in 0..m {
        let uj: DVector<T> = u.column(j).into_owned();
        raw[(j, j)] = q(&uj);
        for k in (j + 1)..m {
            let uk: DVector<T> = u.column(k).into_owned();
            let v = (q(&(&uj + &uk)) - q(&(&uj - &uk))) * quarter;
            raw[(j, k)] = v;
            raw[(k, j)] = v;
        }
    }
    let (matrix, asymmetry) = symmetrize(&raw);
    Ok(FormMatrix { matrix, asymmetry })
}

/// `(n₊, n₋)` of a symmetric form, or `DegenerateCrossing` when the
/// smallest eigenvalue magnitude is below `1e-8·‖form‖`.
pub fn inertia_of_form<T: Real>(form: &DMatrix<T>, t0: T) -> Result<(usize, usize, Vec<T>)> {
    let values = crate::linalg::dense::symmetric_eigen(form).values;
    let norm = max_abs(form).max(values.iter().fold(T::zero(), |a, v| a.max(v.abs())));
    let smallest = values.iter().fold(T::infinity(), |a, v| a.min(v.abs()));
    if smallest < T::lit(1e-8) * norm || norm == T::zero() {
        return Err(Error::DegenerateCrossing {
            t0: t0.to_f64_lossy(),
            smallest: smallest.to_f64_lossy(),
        });
    }
    let plus = values.iter().filter(|v| **v > T::zero()).count();
    Ok((plus, values.len() - plus, values))
}
