use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::assembly::AssembledOperator;
use crate::error::{Error, Result};
use crate::linalg::dense::{generalized_symmetric_eigen, symmetric_eigen, vec_norm};
use crate::linalg::{CsrMatrix, EnvelopeLdl};
use crate::scalar::Real;

/// Controls for [`solve_pencil`].
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// relative backward error `‖Ax − ΛMx‖ / ((‖A‖ + |Λ|‖M‖)‖x‖)` to reach
    pub tol: f64,
    /// accepted when `tol` cannot be reached within the restart budget
    pub fallback_tol: f64,
    pub block: usize,
    pub max_restarts: usize,
    /// pencils of at most this many rows are solved densely
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            fallback_tol: 1e-8,
            block: 4,
            max_restarts: 40,
            dense_threshold: 200,
            seed: 0x5eed_1234,
        }
    }
}

/// Eigenpairs of a symmetric pencil, ascending, with `M`-orthonormal vectors.
#[derive(Debug, Clone)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
    /// one column per value
    pub vectors: DMatrix<T>,
    /// relative backward errors
    pub residuals: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn backward_error<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, x: &DVector<T>, lam: T, scale: (T, T)) -> T {
    let r = a.mul_vec(x) - m.mul_vec(x) * lam;
    vec_norm(&r) / ((scale.0 + lam.abs() * scale.1) * vec_norm(x))
}

/// Number of eigenvalues of `(A, M)` strictly below `x`, by Sylvester's law
/// of inertia applied to `A − xM`.
pub fn count_below<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, x: T) -> Result<usize> {
    let f = EnvelopeLdl::factor(&a.linear_combination(T::one(), m, -x))?;
    Ok(f.inertia().negative)
}

/// The `k` eigenpairs of `A x = Λ M x` nearest `shift`.
///
/// Small pencils are solved densely; larger ones by shift-invert block
/// Krylov iteration with full `M`-reorthogonalization and thick restarts.
/// The starting block is seeded, so results are reproducible.
pub fn solve_pencil<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    k: usize,
    shift: T,
    opts: &SolverOptions,
) -> Result<Spectrum<T>> {
    let n = a.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("requested {k} eigenpairs of a {n}-dimensional pencil")));
    }
    let scale = (a.norm_inf(), m.norm_inf());
    if n <= opts.dense_threshold {
        return dense_pencil(a, m, k, shift, scale);
    }
    let shifted = a.linear_combination(T::one(), m, -shift);
    let f = EnvelopeLdl::factor(&shifted)?;
    let apply = |x: &DVector<T>| f.solve(&m.mul_vec(x));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let b0 = opts.block.max(1).min(n);
    let max_dim = (4 * k + 8 * b0).max(60).min(n);
    let mut start = DMatrix::from_fn(n, b0, |_, _| T::lit(rng.random::<f64>() - 0.5));
    let tol = T::lit(opts.tol);
    let mut best: Option<(Vec<T>, DMatrix<T>, Vec<T>)> = None;

    for _restart in 0..opts.max_restarts {
        let mut q: Vec<DVector<T>> = Vec::new();
        let mut mq: Vec<DVector<T>> = Vec::new();
        let mut w: Vec<DVector<T>> = Vec::new();
        let mut h = DMatrix::<T>::zeros(0, 0);
        let mut block: Vec<DVector<T>> = start.column_iter().map(|c| c.into_owned()).collect();
        let bsize = block.len();

        loop {
            let added = extend_basis(m, &mut q, &mut mq, block, &mut rng);
            if added == 0 {
                break;
            }
            let lo = w.len();
            let fresh: Vec<DVector<T>> = q[lo..].par_iter().map(&apply).collect();
            w.extend(fresh);
            let p = q.len();
            let mut h2 = DMatrix::zeros(p, p);
            h2.view_mut((0, 0), (lo, lo)).copy_from(&h);
            for j in lo..p {
                for i in 0..p {
                    let v = mq[i].dot(&w[j]);
                    h2[(i, j)] = v;
                    h2[(j, i)] = v;
                }
            }
            h = h2;

            if p >= k {
                let (vals, vecs, res) = ritz(a, m, &q, &h, k.max(bsize).min(p), scale);
                let converged = res.iter().take(k).all(|r| *r <= tol);
                let better = match &best {
                    None => true,
                    Some((_, _, r)) => max_of(&res[..k]) < max_of(&r[..k]),
                };
                if better {
                    best = Some((vals.clone(), vecs.clone(), res.clone()));
                }
                if converged {
                    return Ok(finish(vals, vecs, res, k));
                }
                if p + bsize > max_dim {
                    start = vecs;
                    break;
                }
            }
            if p + bsize > max_dim {
                break;
            }
            block = w[lo..].to_vec();
        }
    }
    match best {
        Some((vals, vecs, res)) if max_of(&res[..k]) <= T::lit(opts.fallback_tol) => Ok(finish(vals, vecs, res, k)),
        Some((_, _, res)) => Err(Error::ConvergenceFailure(format!(
            "backward error {:e} after {} restarts",
            max_of(&res[..k]).to_f64_lossy(),
            opts.max_restarts
        ))),
        None => Err(Error::ConvergenceFailure("no Ritz values produced".into())),
    }
}

fn max_of<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |a, b| a.max(*b))
}

/// Appends the `M`-orthonormalized columns of `block` to the basis
/// (classical Gram-Schmidt, twice). Columns that collapse are replaced by
/// random directions. Returns the number of vectors added.
fn extend_basis<T: Real>(
    m: &CsrMatrix<T>,
    q: &mut Vec<DVector<T>>,
    mq: &mut Vec<DVector<T>>,
    block: Vec<DVector<T>>,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = m.nrows();
    let mut added = 0;
    for mut z in block {
        if q.len() >= n {
            break;
        }
        for attempt in 0..4 {
            let before = m.bilinear(&z, &z).sqrt();
            for _pass in 0..2 {
                let c: Vec<T> = mq.par_iter().map(|v| v.dot(&z)).collect();
                for (qi, ci) in q.iter().zip(&c) {
                    z.axpy(-*ci, qi, T::one());
                }
            }
            let mz = m.mul_vec(&z);
            let nrm = z.dot(&mz).max(T::zero()).sqrt();
            if nrm > before * T::lit(1e-8) && nrm > T::zero() {
                q.push(&z / nrm);
                mq.push(mz / nrm);
                added += 1;
                break;
            }
            if attempt == 3 {
                return added;
            }
            z = DVector::from_fn(n, |_, _| T::lit(rng.random::<f64>() - 0.5));
        }
    }
    added
}

/// Rayleigh-Ritz on the basis: the `count` Ritz pairs with largest `|θ|`
/// (nearest the shift), refined by Rayleigh quotients.
fn ritz<T: Real>(
    a: &CsrMatrix<T>,
    m: &CsrMatrix<T>,
    q: &[DVector<T>],
    h: &DMatrix<T>,
    count: usize,
    scale: (T, T),
) -> (Vec<T>, DMatrix<T>, Vec<T>) {
    let e = symmetric_eigen(h);
    let p = q.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| {
        e.values[j]
            .abs()
            .partial_cmp(&e.values[i].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let n = q[0].len();
    let picked: Vec<(T, DVector<T>, T)> = order[..count]
        .par_iter()
        .map(|&c| {
            let mut x = DVector::<T>::zeros(n);
            for (i, qi) in q.iter().enumerate() {
                x.axpy(e.vectors[(i, c)], qi, T::one());
            }
            let mx = m.mul_vec(&x);
            let nrm = x.dot(&mx).sqrt();
            x /= nrm;
            let lam = a.bilinear(&x, &x);
            let res = backward_error(a, m, &x, lam, scale);
            (lam, x, res)
        })
        .collect();
    let vals = picked.iter().map(|p| p.0).collect();
    let vecs = DMatrix::from_columns(&picked.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let res = picked.iter().map(|p| p.2).collect();
    (vals, vecs, res)
}

fn finish<T: Real>(vals: Vec<T>, vecs: DMatrix<T>, res: Vec<T>, k: usize) -> Spectrum<T> {
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
    Spectrum {
        values: idx.iter().map(|&i| vals[i]).collect(),
        vectors: DMatrix::from_columns(&idx.iter().map(|&i| vecs.column(i).into_owned()).collect::<Vec<_>>()),
        residuals: idx.iter().map(|&i| res[i]).collect(),
    }
}

fn dense_pencil<T: Real>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, k: usize, shift: T, scale: (T, T)) -> Result<Spectrum<T>> {
    let e = generalized_symmetric_eigen(&a.to_dense(), &m.to_dense())?;
    let mut idx: Vec<usize> = (0..e.values.len()).collect();
    idx.sort_by(|&i, &j| {
        (e.values[i] - shift)
            .abs()
            .partial_cmp(&(e.values[j] - shift).abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    idx.truncate(k);
    idx.sort_unstable();
    let vectors = DMatrix::from_columns(&idx.iter().map(|&i| e.vectors.column(i).into_owned()).collect::<Vec<_>>());
    let values: Vec<T> = idx.iter().map(|&i| e.values[i]).collect();
    let residuals = values
        .iter()
        .enumerate()
        .map(|(c, &lam)| backward_error(a, m, &vectors.column(c).into_owned(), lam, scale))
        .collect();
    Ok(Spectrum {
        values,
        vectors,
        residuals,
    })
}

/// Eigenpairs of the assembled operator nearest `shift` (free dofs).
pub fn solve_spectrum<T: Real>(op: &AssembledOperator<T>, k: usize, shift: T) -> Result<Spectrum<T>> {
    solve_pencil(&op.a, &op.m, k, shift, &SolverOptions::default())
}

/// The `k` lowest eigenpairs. The shift sits below the spectrum (from the
/// form bound); completeness is certified by an inertia count.
pub fn lowest<T: Real>(op: &AssembledOperator<T>, k: usize, opts: &SolverOptions) -> Result<Spectrum<T>> {
    let floor = T::one() - op.form_shift();
    let spec = solve_pencil(&op.a, &op.m, k, floor - T::one(), opts)?;
    let top = spec.values[k - 1];
    let probe = top - T::lit(1e-7).max(T::lit(1e3) * T::EPS) * top.abs().max(T::one());
    let below = count_below(&op.a, &op.m, probe)?;
    let found = spec.values.iter().filter(|&&v| v < probe).count();
    if below != found {
        return Err(Error::ConvergenceFailure(format!(
            "{below} eigenvalues below {probe}, solver returned {found}"
        )));
    }
    Ok(spec)
}
