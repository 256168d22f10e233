use nalgebra::{DMatrix, DVector};

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigen-decomposition of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T: Real> {
    /// ascending
    pub values: Vec<T>,
    /// orthonormal columns matching `values`
    pub vectors: DMatrix<T>,
}

/// Eigen-decomposition of the symmetric part of `a` by nalgebra's
/// tridiagonal QR, carried out in `f64`.
pub fn symmetric_eigen<T: Real>(a: &DMatrix<T>) -> SymmetricEigen<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    if n == 0 {
        return SymmetricEigen {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        };
    }
    let s = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)].to_f64_lossy() + a[(j, i)].to_f64_lossy()));
    let e = nalgebra::SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
    SymmetricEigen {
        values: order.iter().map(|&i| T::lit(e.eigenvalues[i])).collect(),
        vectors: DMatrix::from_fn(n, n, |r, c| T::lit(e.eigenvectors[(r, order[c])])),
    }
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm<T: Real>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    let e = symmetric_eigen(a);
    e.values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

/// Spectral norm of a general matrix, via the eigenvalues of `AᵀA`.
pub fn spectral_norm<T: Real>(a: &DMatrix<T>) -> T {
    if a.is_empty() {
        return T::zero();
    }
    symmetric_norm(&(a.transpose() * a)).sqrt()
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky<T: Real>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    let mut l = DMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= T::zero() || !d.is_finite() {
            return Err(Error::FactorizationFailure(format!("matrix not positive definite at column {j}")));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower triangular `L`, column by column of `b`.
pub fn solve_lower<T: Real>(l: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `Lᵀ x = b` for lower triangular `L`.
pub fn solve_upper_transposed<T: Real>(l: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Dense generalized symmetric-definite eigenproblem `A x = λ B x`.
/// Eigenvectors are `B`-orthonormal, eigenvalues ascending.
pub fn generalized_symmetric_eigen<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<SymmetricEigen<T>> {
    let l = cholesky(b)?;
    let y = solve_lower(&l, a);
    let c = solve_lower(&l, &y.transpose());
    let e = symmetric_eigen(&c);
    let vectors = solve_upper_transposed(&l, &e.vectors);
    Ok(SymmetricEigen {
        values: e.values,
        vectors,
    })
}

/// `xᵀ M y`.
pub fn m_dot<T: Real>(m: &CsrMatrix<T>, x: &DVector<T>, y: &DVector<T>) -> T {
    m.bilinear(x, y)
}

/// Orthonormalizes the columns of `u` in the `M` inner product
/// (`UᵀMU = I`) by two passes of modified Gram-Schmidt.
pub fn m_orthonormalize<T: Real>(m: &CsrMatrix<T>, u: &DMatrix<T>) -> Result<DMatrix<T>> {
    let mut out = u.clone();
    let ncol = u.ncols();
    for j in 0..ncol {
        for _pass in 0..2 {
            let mut col = out.column(j).into_owned();
            let mcol = m.mul_vec(&col);
            for k in 0..j {
                let c = out.column(k).dot(&mcol);
                col.axpy(-c, &out.column(k).into_owned(), T::one());
            }
            out.set_column(j, &col);
        }
        let col = out.column(j).into_owned();
        let nrm2 = m.bilinear(&col, &col);
        if !(nrm2 > T::zero()) {
            return Err(Error::InvalidInput(format!("column {j} is linearly dependent")));
        }
        out.set_column(j, &(col / nrm2.sqrt()));
    }
    Ok(out)
}

/// `UᵀMV` for dense column blocks.
pub fn m_gram<T: Real>(m: &CsrMatrix<T>, u: &DMatrix<T>, v: &DMatrix<T>) -> DMatrix<T> {
    let mv = DMatrix::from_columns(&(0..v.ncols()).map(|j| m.mul_vec(&v.column(j).into_owned())).collect::<Vec<_>>());
    if v.ncols() == 0 {
        return DMatrix::zeros(u.ncols(), 0);
    }
    u.transpose() * mv
}

/// Symmetric part `(A + Aᵀ)/2` and the max-abs asymmetry.
pub fn symmetrize<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, T) {
    let half = T::lit(0.5);
    let mut asym = T::zero();
    let s = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        half * (a[(i, j)] + a[(j, i)])
    });
    (s, asym)
}

pub fn max_abs<T: Real>(a: &DMatrix<T>) -> T {
    a.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

pub fn vec_amax<T: Real>(x: &DVector<T>) -> T {
    x.iter().fold(T::zero(), |acc, v| acc.max(v.abs()))
}

pub fn vec_norm<T: Real>(x: &DVector<T>) -> T {
    x.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a + a.transpose()
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = random_symmetric(12, 1);
        let e = symmetric_eigen(&a);
        let d = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let rec = &e.vectors * d * e.vectors.transpose();
        assert!((rec - &a).amax() < 1e-13);
        assert!((e.vectors.transpose() * &e.vectors - DMatrix::identity(12, 12)).amax() < 1e-13);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_handles_repeated_eigenvalues() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0, 2.0, 0.5]));
        let e = symmetric_eigen(&a);
        assert_eq!(e.values, vec![0.5, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn generalized_eigen_is_b_orthonormal() {
        let a = random_symmetric(8, 2);
        let r = random_symmetric(8, 3);
        let b = &r * &r + DMatrix::identity(8, 8) * 2.0;
        let e = generalized_symmetric_eigen(&a, &b).unwrap();
        let x = &e.vectors;
        assert!((x.transpose() * &b * x - DMatrix::identity(8, 8)).amax() < 1e-12);
        for (j, lam) in e.values.iter().enumerate() {
            let res = &a * x.column(j) - &b * x.column(j) * *lam;
            assert!(res.amax() < 1e-11);
        }
    }

    #[test]
    fn norms_agree_on_diagonal() {
        let a = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![-3.0, 1.0, 2.0]));
        assert!((symmetric_norm(&a) - 3.0).abs() < 1e-14);
        assert!((spectral_norm(&a) - 3.0).abs() < 1e-12);
    }
}
