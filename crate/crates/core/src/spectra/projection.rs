use nalgebra::{DMatrix, DVector};

use super::cluster::EigenCluster;
use super::solver::{count_below, solve_pencil, SolverOptions};
use crate::assembly::AssembledOperator;
use crate::error::{Error, Result};
use crate::linalg::dense::{m_gram, m_orthonormalize, spectral_norm, symmetric_eigen};
use crate::linalg::{CsrMatrix, EnvelopeLdl};
use crate::scalar::Real;

/// `P(t) = U(t)U(t)ᵀM`, the `M`-orthogonal spectral projection of `(A(t), M)`
/// onto the eigenvalues in the isolating interval `[Λ − g/2, Λ + g/2]` of a
/// cluster fixed at `t0`.
#[derive(Debug, Clone)]
pub struct RieszProjection<T: Real> {
    pub t: T,
    /// `M`-orthonormal basis of the range
    pub basis: DMatrix<T>,
    /// eigenvalues of `(A(t), M)` inside the interval, ascending
    pub values: Vec<T>,
    pub interval: (T, T),
}

impl<T: Real> RieszProjection<T> {
    /// The projection of a cluster onto its own eigenspace.
    pub fn of_cluster(cluster: &EigenCluster<T>) -> Self {
        let half = cluster.gap * T::lit(0.5);
        Self {
            t: cluster.t0,
            basis: cluster.u.clone(),
            values: cluster.members.clone(),
            interval: (cluster.lambda_big - half, cluster.lambda_big + half),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn apply(&self, m: &CsrMatrix<T>, x: &DVector<T>) -> DVector<T> {
        let mx = m.mul_vec(x);
        &self.basis * (self.basis.transpose() * mx)
    }

    /// `trace(P) = trace(UᵀMU)`.
    pub fn trace(&self, m: &CsrMatrix<T>) -> T {
        m_gram(m, &self.basis, &self.basis).trace()
    }

    /// `‖P² − P‖` measured on the basis: `‖(UᵀMU)² − UᵀMU‖`.
    pub fn idempotency_defect(&self, m: &CsrMatrix<T>) -> T {
        let g = m_gram(m, &self.basis, &self.basis);
        spectral_norm(&(&g * &g - &g))
    }
}

/// `P(t)` for the operator at `t`, isolating the same interval as the
/// cluster at `t0`. The eigenvalue count inside the interval is certified by
/// inertia.
pub fn riesz_projection<T: Real>(op_t: &AssembledOperator<T>, cluster: &EigenCluster<T>) -> Result<RieszProjection<T>> {
    let half = cluster.gap * T::lit(0.5);
    let (lo, hi) = (cluster.lambda_big - half, cluster.lambda_big + half);
    let inside = count_below(&op_t.a, &op_t.m, hi)? - count_below(&op_t.a, &op_t.m, lo)?;
    if inside != cluster.m {
        return Err(Error::ClusterSplitLeak {
            expected: cluster.m,
            found: inside,
        });
    }
    let shift = cluster.lambda_big + cluster.gap * T::lit(0.0123);
    let k = (cluster.m + 2).min(op_t.nfree());
    let spec = solve_pencil(&op_t.a, &op_t.m, k, shift, &SolverOptions::default())?;
    let cols: Vec<usize> = (0..spec.len()).filter(|&i| spec.values[i] > lo && spec.values[i] < hi).collect();
    if cols.len() != cluster.m {
        return Err(Error::ClusterSplitLeak {
            expected: cluster.m,
            found: cols.len(),
        });
    }
    let raw = DMatrix::from_columns(&cols.iter().map(|&i| spec.vectors.column(i).into_owned()).collect::<Vec<_>>());
    Ok(RieszProjection {
        t: op_t.t,
        basis: m_orthonormalize(&op_t.m, &raw)?,
        values: cols.iter().map(|&i| spec.values[i]).collect(),
        interval: (lo, hi),
    })
}

/// `‖P(t) − P‖` in the `M`-norm: the sine of the largest principal angle
/// between the two ranges (exact, via the singular values of `UᵀMU(t)`).
pub fn projection_distance<T: Real>(m: &CsrMatrix<T>, p: &RieszProjection<T>, pt: &RieszProjection<T>) -> T {
    let c = m_gram(m, &p.basis, &pt.basis);
    let e = symmetric_eigen(&(c.transpose() * &c));
    let smallest = e.values.first().copied().unwrap_or(T::one()).max(T::zero()).min(T::one());
    (T::one() - smallest).max(T::zero()).sqrt()
}

/// Coefficients `C(2k, k)/4^k` of `(1 − x)^{-1/2} = Σ c_k x^k`.
fn binomial_coefficients<T: Real>(count: usize) -> Vec<T> {
    let mut c = Vec::with_capacity(count);
    let mut v = T::one();
    for k in 0..count {
        c.push(v);
        v = v * T::count(2 * k + 1) / T::count(2 * k + 2);
    }
    c
}

/// `(I − D²)^{-1/2}` by the binomial series, truncated once the tail bound
/// `c_{K+1}‖D‖^{2(K+1)}/(1 − ‖D‖²)` drops below `tail`.
fn inverse_sqrt_series<T: Real>(d: &DMatrix<T>, norm: T, tail: T) -> (DMatrix<T>, usize) {
    let n = d.nrows();
    let d2 = d * d;
    let x = norm * norm;
    let coeffs = binomial_coefficients::<T>(10_000);
    let mut out = DMatrix::<T>::identity(n, n);
    let mut power = DMatrix::<T>::identity(n, n);
    let mut xk = T::one();
    for k in 1..coeffs.len() {
        power = &power * &d2;
        xk *= x;
        out += &power * coeffs[k];
        let next = if k + 1 < coeffs.len() { coeffs[k + 1] } else { coeffs[k] };
        if next * xk * x / (T::one() - x) < tail || x == T::zero() {
            return (out, k);
        }
    }
    (out, coeffs.len())
}

/// Transformation operators `U(t)` and `U(t)⁻¹` between `ran P` and
/// `ran P(t)`.
///
/// Both act as the identity on the `M`-orthogonal complement of
/// `span(U, U(t))`; on that span (dimension ≤ 2m) they are stored as small
/// matrices in an `M`-orthonormal basis `Z`.
#[derive(Debug, Clone)]
pub struct TransformationOperator<T: Real> {
    pub z: DMatrix<T>,
    /// `U(t)` restricted to `span Z`
    pub forward: DMatrix<T>,
    /// `U(t)⁻¹` restricted to `span Z`
    pub inverse: DMatrix<T>,
    /// `P` and `P(t)` restricted to `span Z`
    pub p: DMatrix<T>,
    pub pt: DMatrix<T>,
    /// `‖D‖ = ‖P(t) − P‖`
    pub distance: T,
    pub series_terms: usize,
}

impl<T: Real> TransformationOperator<T> {
    pub fn new(m: &CsrMatrix<T>, p: &RieszProjection<T>, pt: &RieszProjection<T>) -> Result<Self> {
        let distance = projection_distance(m, p, pt);
        if distance >= T::one() {
            return Err(Error::ProjectionsTooFar(distance.to_f64_lossy()));
        }
        let stacked = DMatrix::from_columns(
            &p.basis
                .column_iter()
                .chain(pt.basis.column_iter())
                .map(|c| c.into_owned())
                .collect::<Vec<_>>(),
        );
        let z = span_basis(m, &stacked)?;
        let s = z.ncols();
        let zu = m_gram(m, &z, &p.basis);
        let zv = m_gram(m, &z, &pt.basis);
        let pp = &zu * zu.transpose();
        let qq = &zv * zv.transpose();
        let id = DMatrix::<T>::identity(s, s);
        let d = &qq - &pp;
        let (root, terms) = inverse_sqrt_series(&d, distance, T::lit(1e-12) * T::lit(1e-3));
        let forward = &root * ((&id - &qq) * (&id - &pp) + &qq * &pp);
        let inverse = &root * ((&id - &pp) * (&id - &qq) + &pp * &qq);
        Ok(Self {
            z,
            forward,
            inverse,
            p: pp,
            pt: qq,
            distance,
            series_terms: terms,
        })
    }

    fn act(&self, m: &CsrMatrix<T>, small: &DMatrix<T>, x: &DVector<T>) -> DVector<T> {
        let c = self.z.transpose() * m.mul_vec(x);
        let s = self.z.ncols();
        x + &self.z * ((small - DMatrix::<T>::identity(s, s)) * c)
    }

    pub fn apply(&self, m: &CsrMatrix<T>, x: &DVector<T>) -> DVector<T> {
        self.act(m, &self.forward, x)
    }

    pub fn apply_inverse(&self, m: &CsrMatrix<T>, x: &DVector<T>) -> DVector<T> {
        self.act(m, &self.inverse, x)
    }

    /// `‖U(t)P − P(t)U(t)‖` (zero off `span Z`, so exact on it).
    pub fn intertwining_defect(&self) -> T {
        spectral_norm(&(&self.forward * &self.p - &self.pt * &self.forward))
    }

    /// `‖U(t)U(t)⁻¹ − I‖`.
    pub fn inverse_defect(&self) -> T {
        let s = self.z.ncols();
        spectral_norm(&(&self.forward * &self.inverse - DMatrix::<T>::identity(s, s)))
    }
}

/// `M`-orthonormal basis of the column span, dropping dependent columns.
fn span_basis<T: Real>(m: &CsrMatrix<T>, cols: &DMatrix<T>) -> Result<DMatrix<T>> {
    let g = m_gram(m, cols, cols);
    let e = symmetric_eigen(&g);
    let top = e.values.last().copied().unwrap_or(T::zero());
    let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > top * T::lit(1e-24)).collect();
    if keep.is_empty() {
        return Err(Error::InvalidInput("empty span".into()));
    }
    let raw = DMatrix::from_columns(
        &keep
            .iter()
            .map(|&i| cols * e.vectors.column(i) / e.values[i].sqrt())
            .collect::<Vec<_>>(),
    );
    m_orthonormalize(m, &raw)
}

pub fn transformation_operator<T: Real>(
    m: &CsrMatrix<T>,
    p: &RieszProjection<T>,
    pt: &RieszProjection<T>,
) -> Result<TransformationOperator<T>> {
    TransformationOperator::new(m, p, pt)
}

/// Eigenvalues of `T(t) = P U(t)⁻¹ M⁻¹A(t) U(t) P` on `ran P`, evaluated
/// matrix-free with a mass-matrix solve, with the asymmetry of the `m×m`
/// representation.
pub fn similarity_eigenvalues<T: Real>(
    op_t: &AssembledOperator<T>,
    p: &RieszProjection<T>,
    u: &TransformationOperator<T>,
) -> Result<(Vec<T>, T)> {
    let mfac = EnvelopeLdl::factor(&op_t.m)?;
    let m = &op_t.m;
    let k = p.rank();
    let mut small = DMatrix::<T>::zeros(k, k);
    let cols: Vec<DVector<T>> = (0..k)
        .map(|j| {
            let y = u.apply(m, &p.basis.column(j).into_owned());
            let z = mfac.solve(&op_t.a.mul_vec(&y));
            u.apply_inverse(m, &z)
        })
        .collect();
    for j in 0..k {
        let coords = p.basis.transpose() * m.mul_vec(&cols[j]);
        small.set_column(j, &coords);
    }
    // U(t) is M-unitary, so T(t) is symmetric in the M-orthonormal basis
    let sym = (&small + small.transpose()) * T::lit(0.5);
    let asym = crate::linalg::dense::max_abs(&(&small - &sym));
    Ok((symmetric_eigen(&sym).values, asym))
}

/// Reference check of the Laurent expansion of the resolvent about `Λ` at a
/// real point `ζ = Λ + δ`: returns `‖(A − ζM)⁻¹Mx − [Σ_k (μ_k−ζ)⁻¹P_k x +
/// Σ_{n≤2} (ζ−Λ)ⁿSⁿ⁺¹Mx]‖_M` and the bound `(|δ|/g)³/(g − |δ|)·‖x‖_M` on
/// the neglected terms. The `μ_k` are the cluster members (all equal to `Λ`
/// for an unsplit cluster).
pub fn resolvent_expansion_defect<T: Real>(
    op: &AssembledOperator<T>,
    cluster: &EigenCluster<T>,
    delta: T,
    x: &DVector<T>,
) -> Result<(T, T)> {
    use super::resolvent::{ReducedResolvent, ResolventAction};
    let zeta = cluster.lambda_big + delta;
    let f = EnvelopeLdl::factor(&op.a.linear_combination(T::one(), &op.m, -zeta))?;
    let exact = f.solve(&op.m.mul_vec(x));
    let s = ReducedResolvent::new(op, cluster)?;
    // cluster part resolved exactly, so split clusters are handled too
    let au = DMatrix::from_columns(
        &(0..cluster.m)
            .map(|j| op.a.mul_vec(&cluster.u.column(j).into_owned()))
            .collect::<Vec<_>>(),
    );
    let small = symmetric_eigen(&(cluster.u.transpose() * au));
    let y = &cluster.u * &small.vectors;
    let coeffs = y.transpose() * op.m.mul_vec(x);
    let mut approx = DVector::<T>::zeros(x.len());
    for k in 0..cluster.m {
        approx.axpy(coeffs[k] / (small.values[k] - zeta), &y.column(k), T::one());
    }
    let mut term = x.clone();
    let mut power = T::one();
    for _ in 0..3 {
        term = s.apply(&op.m.mul_vec(&term))?;
        approx += &term * power;
        power *= delta;
    }
    let diff = exact - approx;
    let mnorm = |v: &DVector<T>| op.m.bilinear(v, v).sqrt();
    let g = cluster.gap;
    let r = delta.abs() / g;
    Ok((mnorm(&diff), r * r * r / (g - delta.abs()) * mnorm(x)))
}
