//! Envelope (skyline) `LDLᵀ` factorization of sparse symmetric matrices.
//!
//! No pivoting is performed, so `D` is diagonal and the factorization is a
//! congruence: the signs of `D` give the inertia of the matrix (Sylvester).
//! Rows are reordered by reverse Cuthill-McKee to keep the envelope narrow.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct EnvelopeLdl<T> {
    n: usize,
    /// new index -> old index
    perm: Vec<usize>,
    /// first column of the envelope of each (permuted) row
    first: Vec<usize>,
    start: Vec<usize>,
    lower: Vec<T>,
    diag: Vec<T>,
}

/// Counts of negative, zero and positive pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

impl<T: Real> EnvelopeLdl<T> {
    /// Factors `a`, which must be structurally and numerically symmetric.
    pub fn factor(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::InvalidInput("LDL of a non-square matrix".into()));
        }
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut first = vec![0usize; n];
        for (i, &old) in perm.iter().enumerate() {
            first[i] = a.row_structure(old).iter().map(|&j| inv[j]).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + (i - first[i]));
        }
        let mut lower = vec![T::zero(); start[n]];
        let mut diag = vec![T::zero(); n];

        let scale = a.max_abs().max(T::min_positive_value());
        let tiny = scale * T::EPS * T::lit(16.0);

        for i in 0..n {
            let fi = first[i];
            let (lo, hi) = (start[i], start[i + 1]);
            let mut aii = T::zero();
            for (j, v) in a.row(perm[i]) {
                let jn = inv[j];
                if jn < i {
                    lower[lo + (jn - fi)] += v;
                } else if jn == i {
                    aii += v;
                }
            }
            // lower[lo..hi] holds u_ij = l_ij d_j once finished
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut acc = T::zero();
                if k0 < j {
                    let row_j = &lower[start[j] + (k0 - fj)..start[j] + (j - fj)];
                    let row_i = &lower[lo + (k0 - fi)..lo + (j - fi)];
                    acc = row_j.iter().zip(row_i).fold(T::zero(), |s, (&x, &y)| s + x * y);
                }
                lower[lo + (j - fi)] -= acc;
            }
            let mut dii = aii;
            for j in fi..i {
                let u = lower[lo + (j - fi)];
                let l = u / diag[j];
                dii -= u * l;
                lower[lo + (j - fi)] = l;
            }
            if !dii.is_finite() || dii.abs() <= tiny {
                return Err(Error::FactorizationFailure(format!(
                    "pivot {i} of {n} is {:e} (matrix scale {:e})",
                    dii.to_f64_lossy(),
                    scale.to_f64_lossy()
                )));
            }
            diag[i] = dii;
            debug_assert_eq!(hi - lo, i - fi);
        }

        Ok(Self {
            n,
            perm,
            first,
            start,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn inertia(&self) -> Inertia {
        let mut out = Inertia {
            negative: 0,
            zero: 0,
            positive: 0,
        };
        for d in &self.diag {
            if *d < T::zero() {
                out.negative += 1;
            } else if *d > T::zero() {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            let s = row.iter().zip(&y[fi..i]).fold(T::zero(), |acc, (&l, &x)| acc + l * x);
            y[i] -= s;
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= *d;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.lower[self.start[i]..self.start[i + 1]];
            for (yj, &l) in y[fi..i].iter_mut().zip(row) {
                *yj -= l * yi;
            }
        }
        let mut x = DVector::zeros(self.n);
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph of `a`.
/// Returns `perm` with `perm[new] = old`. Deterministic.
pub fn reverse_cuthill_mckee<T: Real>(a: &CsrMatrix<T>) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row_structure(i).len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];

    let bfs_last = |root: usize, level: &mut Vec<usize>| -> (usize, usize) {
        // returns (a node in the deepest level with minimum degree, depth)
        let mut queue = VecDeque::from([root]);
        let mut touched = vec![root];
        level[root] = 0;
        let mut best = (root, 0usize);
        while let Some(v) = queue.pop_front() {
            let lv = level[v];
            if lv > best.1 || (lv == best.1 && degree[v] < degree[best.0]) {
                best = (v, lv);
            }
            for &w in a.row_structure(v) {
                if level[w] == usize::MAX {
                    level[w] = lv + 1;
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        for v in touched {
            level[v] = usize::MAX;
        }
        best
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // pseudo-peripheral start node
        let mut root = seed;
        let mut depth = 0;
        for _ in 0..8 {
            let (far, d) = bfs_last(root, &mut level);
            if d <= depth {
                break;
            }
            root = far;
            depth = d;
        }
        let comp_start = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = comp_start;
        let mut nbrs = Vec::new();
        while head < order.len() {
            let v = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(a.row_structure(v).iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix<f64> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 - shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplacian_1d(50, 0.0);
        let f = EnvelopeLdl::factor(&a).unwrap();
        let x = DVector::from_fn(50, |i, _| (i as f64).sin());
        let b = a.mul_vec(&x);
        let y = f.solve(&b);
        assert!((y - x).amax() < 1e-10);
    }

    #[test]
    fn inertia_counts_eigenvalues_below_shift() {
        // eigenvalues of the 1D Dirichlet Laplacian: 2 - 2cos(k pi/(n+1))
        let n = 40;
        let shift = 0.97;
        let below = (1..=n)
            .filter(|k| 2.0 - 2.0 * (*k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos() < shift)
            .count();
        let f = EnvelopeLdl::factor(&laplacian_1d(n, shift)).unwrap();
        assert_eq!(f.inertia().negative, below);
        assert_eq!(f.inertia().positive, n - below);
    }

    #[test]
    fn random_symmetric_sparse_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 10.0 + rng.random::<f64>()));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                if j != i {
                    let v: f64 = rng.random::<f64>() - 0.5;
                    t.push((i, j, v));
                    t.push((j, i, v));
                }
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let f = EnvelopeLdl::factor(&a).unwrap();
        let x = DVector::from_fn(n, |i, _| 1.0 + i as f64);
        let y = f.solve(&a.mul_vec(&x));
        assert!((y - &x).amax() < 1e-9 * x.amax());
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::<f64>::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeLdl::factor(&a), Err(Error::FactorizationFailure(_))));
    }
}
