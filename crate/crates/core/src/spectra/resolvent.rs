use nalgebra::{DMatrix, DVector};

use super::cluster::EigenCluster;
use crate::assembly::AssembledOperator;
use crate::error::{Error, Result};
use crate::linalg::dense::vec_norm;
use crate::linalg::{CsrMatrix, EnvelopeLdl};
use crate::scalar::Real;

/// Action of a reduced resolvent on load vectors.
pub trait ResolventAction<T: Real> {
    /// `w` with `(A − ΛM)w = r − MU(Uᵀr)` and `UᵀMw = 0`.
    fn apply(&self, r: &DVector<T>) -> Result<DVector<T>>;
}

/// Reduced resolvent `S` of a cluster, realized by the deflated system
/// `[[A − ΛM, MU], [UᵀM, 0]]·[w; μ] = [r − MU(Uᵀr); 0]`.
///
/// Solved by the fixed point `w ← F⁻¹(r′ + δMw)` with `F = A − (Λ − δ)M`,
/// `δ = 0.01·gap`, projecting out the cluster each sweep. The contraction
/// factor is at most `δ/(gap − δ) ≈ 0.01`.
pub struct ReducedResolvent<'a, T: Real> {
    a: &'a CsrMatrix<T>,
    m: &'a CsrMatrix<T>,
    u: &'a DMatrix<T>,
    mu: DMatrix<T>,
    lambda: T,
    delta: T,
    factor: EnvelopeLdl<T>,
    pub tol: T,
    pub max_iter: usize,
}

impl<'a, T: Real> ReducedResolvent<'a, T> {
    pub fn new(op: &'a AssembledOperator<T>, cluster: &'a EigenCluster<T>) -> Result<Self> {
        Self::from_pencil(&op.a, &op.m, cluster)
    }

    pub fn from_pencil(a: &'a CsrMatrix<T>, m: &'a CsrMatrix<T>, cluster: &'a EigenCluster<T>) -> Result<Self> {
        let delta = T::lit(0.01) * cluster.gap;
        let f = a.linear_combination(T::one(), m, -(cluster.lambda_big - delta));
        let factor = EnvelopeLdl::factor(&f).map_err(|e| Error::SingularSystem(e.to_string()))?;
        let mu = DMatrix::from_columns(
            &(0..cluster.m)
                .map(|j| m.mul_vec(&cluster.u.column(j).into_owned()))
                .collect::<Vec<_>>(),
        );
        Ok(Self {
            a,
            m,
            u: &cluster.u,
            mu,
            lambda: cluster.lambda_big,
            delta,
            factor,
            tol: T::lit(1e-13),
            max_iter: 60,
        })
    }

    /// `r − MU(Uᵀr)`.
    pub fn deflate_load(&self, r: &DVector<T>) -> DVector<T> {
        let once = r - &self.mu * (self.u.transpose() * r);
        &once - &self.mu * (self.u.transpose() * &once)
    }

    fn project(&self, w: &mut DVector<T>) {
        let c = self.mu.transpose() * &*w;
        *w -= self.u * c;
    }

    /// Relative residual of the deflated equation.
    pub fn residual(&self, w: &DVector<T>, rhs: &DVector<T>) -> T {
        let r = self.a.mul_vec(w) - self.m.mul_vec(w) * self.lambda - rhs;
        let scale = vec_norm(rhs).max(self.a.norm_inf() * vec_norm(w)).max(T::min_positive_value());
        vec_norm(&r) / scale
    }
}

impl<T: Real> ResolventAction<T> for ReducedResolvent<'_, T> {
    fn apply(&self, r: &DVector<T>) -> Result<DVector<T>> {
        let rhs = self.deflate_load(r);
        if vec_norm(&rhs) <= T::lit(1e3) * T::EPS * vec_norm(r) {
            return Ok(DVector::zeros(r.len()));
        }
        let mut w = self.factor.solve(&rhs);
        self.project(&mut w);
        let mut last = T::infinity();
        for _ in 0..self.max_iter {
            let res = self.residual(&w, &rhs);
            if res <= self.tol {
                return Ok(w);
            }
            if res > last * T::lit(0.9) && res > T::lit(1e-10) {
                // no contraction: an eigenvalue near Λ is missing from the cluster
                return Err(Error::SingularSystem(format!(
                    "deflated iteration stalled at residual {:e}",
                    res.to_f64_lossy()
                )));
            }
            if res > last * T::lit(0.9) {
                return Ok(w);
            }
            last = res;
            let load = &rhs + self.m.mul_vec(&w) * self.delta;
            w = self.factor.solve(&load);
            self.project(&mut w);
        }
        let res = self.residual(&w, &rhs);
        if res <= T::lit(1e-10) {
            Ok(w)
        } else {
            Err(Error::SingularSystem(format!("residual {:e}", res.to_f64_lossy())))
        }
    }
}

/// Dense reduced resolvent for small brute-force checks: the pseudo-inverse
/// of `A − ΛM` on the `M`-orthogonal complement of `U`, built from a full
/// eigendecomposition.
pub struct DenseResolvent<T: Real> {
    pub s: DMatrix<T>,
    mu: DMatrix<T>,
    u: DMatrix<T>,
}

impl<T: Real> DenseResolvent<T> {
    /// `vectors` are all `M`-orthonormal eigenvectors of a dense pencil with
    /// eigenvalues `values`; `cluster` indexes the columns spanning ran P.
    pub fn new(m: &DMatrix<T>, values: &[T], vectors: &DMatrix<T>, cluster: &[usize], lambda: T) -> Self {
        let n = vectors.nrows();
        let mut s = DMatrix::zeros(n, n);
        for (j, &v) in values.iter().enumerate() {
            if cluster.contains(&j) {
                continue;
            }
            let x = vectors.column(j);
            s += x * x.transpose() / (v - lambda);
        }
        let u = DMatrix::from_columns(&cluster.iter().map(|&j| vectors.column(j).into_owned()).collect::<Vec<_>>());
        let mu = m * &u;
        Self { s, mu, u }
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.u
    }
}

impl<T: Real> ResolventAction<T> for DenseResolvent<T> {
    fn apply(&self, r: &DVector<T>) -> Result<DVector<T>> {
        // S annihilates MU directions already; the deflation is kept for parity
        let rhs = r - &self.mu * (self.u.transpose() * r);
        Ok(&self.s * rhs)
    }
}

/// `reduced_resolvent_apply` for a single load vector.
pub fn reduced_resolvent_apply<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    r: &DVector<T>,
) -> Result<DVector<T>> {
    ReducedResolvent::new(op, cluster)?.apply(r)
}
