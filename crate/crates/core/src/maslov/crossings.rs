use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{AssembledOperator, FlowProblem};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectra::{count_below, lowest, SolverOptions};

/// Crossing times closer than this are merged.
pub const MERGE_TOL: f64 = 1e-8;
/// Relative tolerance on `|Λ_j(t0) − t0²λ0|` at a refined crossing.
pub const CROSSING_TOL: f64 = 1e-10;

/// A conjugate time with the branches of the pencil that pass through
/// `t²λ0` there.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Crossing {
    pub t0: f64,
    /// indices into the ascending spectrum at `t0`
    pub branches: Vec<usize>,
}

impl Crossing {
    pub fn multiplicity(&self) -> usize {
        self.branches.len()
    }
}

/// Number of eigenvalues of `(A(t), M)` strictly below `x`. An exactly
/// singular shift is nudged downward.
pub(crate) fn robust_count<T: Real>(op: &AssembledOperator<T>, x: T) -> Result<usize> {
    let mut shift = x;
    let step = T::lit(1e-12) * x.abs().max(T::one());
    for _ in 0..8 {
        match count_below(&op.a, &op.m, shift) {
            Ok(n) => return Ok(n),
            Err(Error::FactorizationFailure(_)) => shift -= step,
            Err(e) => return Err(e),
        }
    }
    count_below(&op.a, &op.m, shift)
}

fn branch_value<T: Real>(problem: &FlowProblem<T>, j: usize, t: f64, lambda0: f64) -> Result<f64> {
    let op = problem.assemble(T::lit(t))?;
    let spec = lowest(&op, j + 1, &SolverOptions::default())?;
    Ok(spec.values[j].to_f64_lossy() - t * t * lambda0)
}

/// Cubic Hermite interpolant on `[0, 1]`.
fn hermite(g0: f64, g1: f64, d0: f64, d1: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * g0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * g1 + (s3 - s2) * d1
}

/// Bracketed root of `g` on `[lo, hi]` by the Illinois variant of regula
/// falsi, which keeps a sign-changing bracket at every step.
fn refine<F: Fn(f64) -> Result<f64>>(g: F, mut lo: f64, mut hi: f64, mut glo: f64, mut ghi: f64, tol: f64) -> Result<f64> {
    let mut side = 0i8;
    for _ in 0..200 {
        let mut t = (lo * ghi - hi * glo) / (ghi - glo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let gt = g(t)?;
        if gt.abs() <= tol || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            return Ok(t);
        }
        if gt.signum() == glo.signum() {
            lo = t;
            glo = gt;
            if side == -1 {
                ghi *= 0.5;
            }
            side = -1;
        } else {
            hi = t;
            ghi = gt;
            if side == 1 {
                glo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::ConvergenceFailure(format!("crossing refinement stalled in [{lo}, {hi}]")))
}

/// Conjugate times in `[a, b]`: the `t` where some eigenvalue `Λ_j(t)` of
/// the rescaled pencil equals `t²λ0`, i.e. `λ0` is an eigenvalue on `Ω_t`.
///
/// Sign changes of `Λ_j(t) − t²λ0` on a uniform grid are refined to
/// `|Λ_j(t0) − t0²λ0| ≤ 1e-10·max(1, |Λ_j|)`; crossings of several branches
/// within `1e-8` are merged.
pub fn find_crossings<T: Real>(
    problem: &FlowProblem<T>,
    lambda0: f64,
    interval: (f64, f64),
    grid_n: usize,
) -> Result<Vec<Crossing>> {
    let (a, b) = interval;
    if !(a > 0.0 && a < b) {
        return Err(Error::InvalidInput(format!("interval [{a}, {b}] must satisfy 0 < a < b")));
    }
    if grid_n < 8 {
        return Err(Error::InvalidInput(format!("grid_n = {grid_n} must be at least 8")));
    }
    let grid: Vec<f64> = (0..grid_n)
        .map(|i| if i + 1 == grid_n { b } else { a + (b - a) * i as f64 / (grid_n - 1) as f64 })
        .collect();
    let counts: Vec<usize> = grid
        .par_iter()
        .map(|&t| {
            let op = problem.assemble(T::lit(t))?;
            robust_count(&op, T::lit(t * t * lambda0 * (1.0 + 1e-9)))
        })
        .collect::<Result<_>>()?;
    let nfree = problem.free_dofs().len();
    let k = (counts.iter().copied().max().unwrap_or(0) + 1).min(nfree);
    let values: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&t| -> Result<Vec<f64>> {
            let op = problem.assemble(T::lit(t))?;
            let spec = lowest(&op, k, &SolverOptions::default())?;
            Ok(spec.values.iter().map(|v| v.to_f64_lossy() - t * t * lambda0).collect())
        })
        .collect::<Result<_>>()?;

    let mut found: Vec<(f64, usize)> = Vec::new();
    let h = grid[1] - grid[0];
    for j in 0..k {
        let g: Vec<f64> = values.iter().map(|v| v[j]).collect();
        let zero = |i: usize| {
            let big = g[i] + grid[i] * grid[i] * lambda0;
            g[i].abs() <= CROSSING_TOL * big.abs().max(1.0)
        };
        let deriv = |i: usize| {
            if i == 0 {
                (g[1] - g[0]) / (grid[1] - grid[0])
            } else if i + 1 == g.len() {
                (g[i] - g[i - 1]) / (grid[i] - grid[i - 1])
            } else {
                (g[i + 1] - g[i - 1]) / (grid[i + 1] - grid[i - 1])
            }
        };
        for i in 0..grid.len() {
            if zero(i) {
                found.push((grid[i], j));
            }
        }
        for i in 0..grid.len() - 1 {
            if zero(i) || zero(i + 1) {
                continue;
            }
            let (g0, g1) = (g[i], g[i + 1]);
            if g0.signum() != g1.signum() {
                let big = (g0 + grid[i] * grid[i] * lambda0).abs().max(1.0);
                let t = refine(
                    |t| branch_value(problem, j, t, lambda0),
                    grid[i],
                    grid[i + 1],
                    g0,
                    g1,
                    CROSSING_TOL * big,
                )?;
                found.push((t, j));
            } else {
                let dt = grid[i + 1] - grid[i];
                let (d0, d1) = (deriv(i) * dt, deriv(i + 1) * dt);
                if d0.signum() != d1.signum() {
                    let dips = (1..20).any(|s| hermite(g0, g1, d0, d1, s as f64 / 20.0).signum() != g0.signum());
                    if dips {
                        return Err(Error::GridTooCoarse(h));
                    }
                }
            }
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut out: Vec<Crossing> = Vec::new();
    for (t, j) in found {
        match out.last_mut() {
            Some(c) if (t - c.t0).abs() <= MERGE_TOL => {
                let n = c.branches.len() as f64;
                c.t0 = (c.t0 * n + t) / (n + 1.0);
                c.branches.push(j);
            }
            _ => out.push(Crossing { t0: t, branches: vec![j] }),
        }
    }
    Ok(out)
}
