use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::FlowProblem;
use crate::error::{Error, Result};
use crate::linalg::assignment::assign_with_runner_up;
use crate::scalar::Real;
use crate::spectra::{lowest, SolverOptions};

/// Minimum ratio of runner-up to optimal pairing cost.
pub const PAIRING_RATIO: f64 = 2.0;

/// Steps `{1e-2, 5e-3, 2.5e-3}·t0`.
pub fn default_steps(t0: f64) -> Vec<f64> {
    [1e-2, 5e-3, 2.5e-3].iter().map(|s| s * t0).collect()
}

/// Richardson table for an `h²`-expansion: row 0 holds the raw estimates
/// at the given steps, row `k` eliminates the `h^{2k}` term.
pub fn richardson(steps: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let mut table = vec![values.to_vec()];
    for k in 1..values.len() {
        let prev = &table[k - 1];
        let row = (0..prev.len() - 1)
            .map(|i| {
                let r = (steps[i] / steps[i + k]).powi(2);
                (r * prev[i + 1] - prev[i]) / (r - 1.0)
            })
            .collect();
        table.push(row);
    }
    table
}

fn extrapolate(steps: &[f64], values: &[f64]) -> (f64, f64, Vec<Vec<f64>>) {
    let table = richardson(steps, values);
    let best = *table.last().unwrap().last().unwrap();
    let err = if table.len() >= 2 {
        let prev = table[table.len() - 2].last().unwrap();
        (best - prev).abs()
    } else {
        f64::NAN
    };
    (best, err, table)
}

/// Finite-difference derivatives of one branch `λ(t) = Λ(t)/t²`.
#[derive(Debug, Clone, Serialize)]
pub struct FdBranch {
    /// position within the requested window, in order of `λ(t0 + δ)`
    pub slot: usize,
    pub lambda: f64,
    pub d1: f64,
    pub d2: f64,
    pub d1_error: f64,
    pub d2_error: f64,
    pub d1_table: Vec<Vec<f64>>,
    pub d2_table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FdReport {
    pub t0: f64,
    pub steps: Vec<f64>,
    pub branches: Vec<FdBranch>,
    /// runner-up over optimal pairing cost per step (infinite for a single branch)
    pub pairing_ratios: Vec<f64>,
}

impl FdReport {
    /// `λ′` of the branches, ascending.
    pub fn sorted_d1(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.branches.iter().map(|b| b.d1).collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Central differences of the discrete branches in `window` (indices into
/// the ascending spectrum at `t0`), Richardson-extrapolated over `steps`.
///
/// Within the window the branches at `t0 + δ` and `t0 − δ` are paired by
/// optimal assignment on `1 − |u_a(t0+δ)ᵀ M u_b(t0−δ)|`. A pairing is
/// rejected as ambiguous when the runner-up cost is below `PAIRING_RATIO`
/// times the optimum, unless the two pairings give the same derivatives to
/// `1e-9` relative.
pub fn fd_branch_derivatives<T: Real>(
    problem: &FlowProblem<T>,
    t0: f64,
    window: Range<usize>,
    steps: &[f64],
) -> Result<FdReport> {
    if window.is_empty() {
        return Err(Error::InvalidInput("empty branch window".into()));
    }
    if steps.is_empty() || steps.windows(2).any(|w| w[1] >= w[0]) || steps[0] > 1e-2 * t0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "finite-difference steps must be descending and at most 1e-2·t0, got {steps:?}"
        )));
    }
    let k = window.end;
    let mut ts = vec![t0];
    for &s in steps {
        ts.push(t0 + s);
        ts.push(t0 - s);
    }
    let samples: Vec<(Vec<f64>, DMatrix<T>)> = ts
        .par_iter()
        .map(|&t| -> Result<(Vec<f64>, DMatrix<T>)> {
            let op = problem.assemble(T::lit(t))?;
            let spec = lowest(&op, k, &SolverOptions::default())?;
            let values = spec.values[window.clone()]
                .iter()
                .map(|v| v.to_f64_lossy() / (t * t))
                .collect();
            Ok((values, spec.vectors.columns(window.start, window.len()).into_owned()))
        })
        .collect::<Result<_>>()?;
    let mass = problem.assemble(T::lit(t0))?.m;
    let center = &samples[0].0;
    let m = center.len();
    let scale = center.iter().fold(1.0f64, |a, v| a.max(v.abs()));

    let overlap_cost = |x: &DMatrix<T>, y: &DMatrix<T>| -> Vec<Vec<f64>> {
        let my = DMatrix::from_columns(&(0..m).map(|b| mass.mul_vec(&y.column(b).into_owned())).collect::<Vec<_>>());
        let o = x.transpose() * my;
        (0..m)
            .map(|a| (0..m).map(|b| 1.0 - o[(a, b)].to_f64_lossy().abs()).collect())
            .collect()
    };
    // centre branch of each slot; identity when the centre directions are degenerate
    let to_center = {
        let a = assign_with_runner_up(&overlap_cost(&samples[1].1, &samples[0].1));
        match a.runner_up {
            Some(r) if r < PAIRING_RATIO * a.cost => (0..m).collect(),
            _ => a.columns,
        }
    };

    let mut d1 = vec![Vec::new(); m];
    let mut d2 = vec![Vec::new(); m];
    let mut ratios = Vec::new();
    for (i, &s) in steps.iter().enumerate() {
        let (plus, vp) = &samples[1 + 2 * i];
        let (minus, vm) = &samples[2 + 2 * i];
        let a = assign_with_runner_up(&overlap_cost(vp, vm));
        let ratio = match a.runner_up {
            Some(r) if a.cost > 0.0 => r / a.cost,
            _ => f64::INFINITY,
        };
        if ratio < PAIRING_RATIO {
            // ambiguous directions are harmless when both pairings agree
            let alt = a.runner_up_columns.as_ref().unwrap_or(&a.columns);
            let shift = a
                .columns
                .iter()
                .zip(alt)
                .map(|(&b, &c)| (minus[b] - minus[c]).abs() / (2.0 * s))
                .fold(0.0, f64::max);
            if shift > 1e-9 * scale {
                return Err(Error::BranchPairingAmbiguous(ratio));
            }
        }
        ratios.push(ratio);
        for (slot, &b) in a.columns.iter().enumerate() {
            d1[slot].push((plus[slot] - minus[b]) / (2.0 * s));
            d2[slot].push((plus[slot] + minus[b] - 2.0 * center[to_center[slot]]) / (s * s));
        }
    }
    let branches = (0..m)
        .map(|slot| {
            let (v1, e1, t1) = extrapolate(steps, &d1[slot]);
            let (v2, e2, t2) = extrapolate(steps, &d2[slot]);
            FdBranch {
                slot,
                lambda: center[to_center[slot]],
                d1: v1,
                d2: v2,
                d1_error: e1,
                d2_error: e2,
                d1_table: t1,
                d2_table: t2,
            }
        })
        .collect();
    Ok(FdReport {
        t0,
        steps: steps.to_vec(),
        branches,
        pairing_ratios: ratios,
    })
}

/// Splits the lowest `count` eigenvalues at `t0` into windows of values
/// within `tol·max(1, |λ|)` of their neighbours. A window that straddles
/// `count` is kept whole.
pub fn fd_windows<T: Real>(problem: &FlowProblem<T>, t0: f64, count: usize, tol: f64) -> Result<Vec<Range<usize>>> {
    let op = problem.assemble(T::lit(t0))?;
    let values: Vec<f64> = lowest(&op, count + 1, &SolverOptions::default())?
        .values
        .iter()
        .map(|v| v.to_f64_lossy())
        .collect();
    let mut out: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || values[i] - values[i - 1] > tol * values[i].abs().max(1.0);
        if split {
            if start < count {
                out.push(start..i);
            }
            start = i;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{BoundaryCondition, MatrixPotential};
    use crate::geometry::{build_domain, build_mesh, BoundarySpec};
    use std::sync::Arc;

    fn problem(v: MatrixPotential<f64>) -> FlowProblem<f64> {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        let mesh = Arc::new(build_mesh(&d, 0.1, 0).unwrap());
        FlowProblem::new(mesh, v, BoundaryCondition::Dirichlet).unwrap()
    }

    #[test]
    fn richardson_removes_even_terms() {
        let f = |h: f64| 1.0 + 3.0 * h * h - 2.0 * h.powi(4);
        let steps = [0.1, 0.05, 0.025];
        let t = richardson(&steps, &steps.map(f));
        assert!((t[2][0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_scaling_branch() {
        let p = problem(MatrixPotential::zero(1));
        let t0 = 0.8;
        let r = fd_branch_derivatives(&p, t0, 0..1, &default_steps(t0)).unwrap();
        let b = &r.branches[0];
        assert!((b.d1 + 2.0 * b.lambda / t0).abs() < 1e-8 * b.lambda.abs(), "{} {}", b.d1, b.lambda);
        assert!((b.d2 - 6.0 * b.lambda / (t0 * t0)).abs() < 1e-5 * b.lambda.abs());
    }

    #[test]
    fn constant_shift_second_derivative() {
        let c = 3.0;
        let p = problem(MatrixPotential::constant(c));
        let r = fd_branch_derivatives(&p, 1.0, 1..3, &default_steps(1.0)).unwrap();
        for b in &r.branches {
            let mu = b.lambda - c;
            assert!((b.d1 + 2.0 * mu).abs() < 1e-6 * mu);
            assert!((0.5 * b.d2 - 3.0 * mu).abs() < 1e-6 * mu);
        }
    }

    #[test]
    fn windows_keep_clusters_together() {
        let p = problem(MatrixPotential::zero(1));
        let w = fd_windows(&p, 1.0, 4, 1e-2).unwrap();
        assert_eq!(w[0], 0..1);
        assert_eq!(w[1], 1..3);
    }

    #[test]
    fn rejects_bad_steps() {
        let p = problem(MatrixPotential::zero(1));
        assert!(matches!(
            fd_branch_derivatives(&p, 1.0, 0..1, &[1e-3, 2e-3]),
            Err(Error::InvalidInput(_))
        ));
    }
}
