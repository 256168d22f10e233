use std::ops::Range;

use super::{disc_mesh, max_rel, rel, sorted, square_mesh, window_cluster, Case, Verdict};
use crate::assembly::{potential_t_derivatives, BoundaryCondition, FlowProblem, MatrixPotential};
use crate::error::{Error, Result};
use crate::linalg::dense::symmetric_eigen;
use crate::maslov::{crossing_form, FormRoute};
use crate::oracle::{default_steps, fd_branch_derivatives};
use crate::perturbation::{
    asymptotic_expansion, build_t1, build_t2, default_group_tol, first_derivatives, T2Form,
};
use crate::spectra::{lowest, SolverOptions};

pub const SCALING_TOL: f64 = 1e-8;
pub const CONSTANT_TOL: f64 = 1e-8;
pub const CONSTANT_FD_TOL: f64 = 1e-6;
pub const GENERAL_TOL: f64 = 1e-5;
pub const RESIDUAL_RATIO: f64 = 0.3;
pub const SPLITTING_TOL: f64 = 1e-4;
pub const BRIDGE_TOL: f64 = 1e-3;

const EXACT: f64 = 1e-10;
const SHIFT: f64 = 3.0;

fn scaling_cases() -> Result<Vec<Case>> {
    let mut out = Vec::new();
    for (name, mesh) in [("disc", disc_mesh(0.1)?), ("square", square_mesh(0.1)?)] {
        for t0 in [0.6, 0.8, 1.0] {
            let p = FlowProblem::new(mesh.clone(), MatrixPotential::zero(1), BoundaryCondition::Dirichlet)?;
            out.push(Case::new(format!("{name} V=0 t0={t0}"), p, t0, 4, EXACT)?);
        }
    }
    Ok(out)
}

fn constant_case() -> Result<Case> {
    let p = FlowProblem::new(square_mesh(0.1)?, MatrixPotential::constant(SHIFT), BoundaryCondition::Dirichlet)?;
    Case::new("square V=3", p, 1.0, 4, EXACT)
}

fn general_cases() -> Result<Vec<Case>> {
    let mesh = square_mesh(0.1)?;
    let pots = [
        ("gaussian", MatrixPotential::gaussian(4.0, [0.15, -0.1], 0.25)),
        ("coupled", MatrixPotential::coupled(2.0, 6.0, 1.0)),
    ];
    let mut out = Vec::new();
    for (name, v) in pots {
        let n = v.components();
        for (bc_name, bc) in [
            ("dirichlet", BoundaryCondition::Dirichlet),
            ("robin", BoundaryCondition::robin_constant(n, 1.0)),
        ] {
            let p = FlowProblem::new(mesh.clone(), v.clone(), bc)?;
            out.push(Case::new(format!("{name} {bc_name}"), p, 0.9, 3, EXACT)?);
        }
    }
    Ok(out)
}

fn splitting_case() -> Result<(Case, Range<usize>)> {
    let p = FlowProblem::new(square_mesh(0.1)?, MatrixPotential::linear([1.0, 0.0]), BoundaryCondition::Dirichlet)?;
    let case = Case::new("square V=x1", p, 1.0, 3, 1e-3)?;
    let w = case
        .windows
        .iter()
        .find(|w| w.contains(&1))
        .cloned()
        .ok_or_else(|| Error::InvalidInput("no window at the second eigenvalue".into()))?;
    if w.len() != 2 {
        return Err(Error::InvalidInput(format!("cluster at 5π² has {} members", w.len())));
    }
    Ok((case, w))
}

/// Formula `λ′` of the branches of one window, ascending.
fn formula_dlam(case: &Case, w: &Range<usize>) -> Result<Vec<f64>> {
    let cluster = case.cluster(w)?;
    let samples = potential_t_derivatives(&case.problem.potential, case.t0, case.problem.quadrature_points(), false)?;
    let t1 = build_t1(&case.op, &cluster, &samples)?;
    Ok(sorted(first_derivatives(&cluster, &t1).dlam))
}

fn oracle_dlam(case: &Case, w: &Range<usize>) -> Result<Vec<f64>> {
    Ok(fd_branch_derivatives(&case.problem, case.t0, w.clone(), &default_steps(case.t0))?.sorted_d1())
}

pub fn scaling_law() -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for case in scaling_cases()? {
        for w in &case.windows {
            let got = formula_dlam(&case, w)?;
            let expect = sorted(
                case.spec.values[w.clone()]
                    .iter()
                    .map(|v| -2.0 * v / (case.t0 * case.t0) / case.t0)
                    .collect(),
            );
            worst = worst.max(max_rel(&got, &expect));
            checked += got.len();
        }
    }
    Ok((
        worst <= SCALING_TOL && checked >= 24,
        format!("{checked} branches, max rel err {worst:.2e} (tol {SCALING_TOL:e})"),
    ))
}

pub fn constant_shift() -> Verdict {
    let case = constant_case()?;
    let samples = potential_t_derivatives(&case.problem.potential, case.t0, case.problem.quadrature_points(), true)?;
    let (mut formula, mut oracle) = (0.0f64, 0.0f64);
    for w in &case.windows {
        let cluster = case.cluster(w)?;
        let t1 = build_t1(&case.op, &cluster, &samples)?;
        let t2 = build_t2(&case.op, &cluster, &samples, T2Form::Collapsed)?;
        let a = asymptotic_expansion(&cluster, &t1, &t2, default_group_tol(cluster.lambda_big))?;
        let mu = cluster.lambda_omega - SHIFT;
        for b in &a.branches {
            formula = formula.max(rel(b.a1, -2.0 * mu)).max(rel(b.a2, 3.0 * mu));
        }
        let fd = fd_branch_derivatives(&case.problem, case.t0, w.clone(), &default_steps(case.t0))?;
        for b in &fd.branches {
            let mu = b.lambda - SHIFT;
            oracle = oracle.max(rel(b.d1, -2.0 * mu)).max(rel(0.5 * b.d2, 3.0 * mu));
        }
    }
    Ok((
        formula <= CONSTANT_TOL && oracle <= CONSTANT_FD_TOL,
        format!(
            "a1, a2 max rel err {formula:.2e} (tol {CONSTANT_TOL:e}); oracle λ′, λ″/2 max rel err {oracle:.2e} (tol {CONSTANT_FD_TOL:e})"
        ),
    ))
}

pub fn general_potentials() -> Verdict {
    let deltas = [1e-2, 5e-3, 2.5e-3];
    let mut derivative = 0.0f64;
    let mut ratio = 0.0f64;
    for case in general_cases()? {
        let samples = potential_t_derivatives(&case.problem.potential, case.t0, case.problem.quadrature_points(), true)?;
        let top = case.windows.iter().map(|w| w.end).max().unwrap_or(1);
        let shifted: Vec<Vec<f64>> = deltas
            .iter()
            .map(|d| -> Result<Vec<f64>> {
                let t = case.t0 + d;
                let op = case.problem.assemble(t)?;
                Ok(lowest(&op, top, &SolverOptions::default())?
                    .values
                    .iter()
                    .map(|v| v / (t * t))
                    .collect())
            })
            .collect::<Result<_>>()?;
        for w in &case.windows {
            derivative = derivative.max(max_rel(&formula_dlam(&case, w)?, &oracle_dlam(&case, w)?));
            let cluster = case.cluster(w)?;
            let t1 = build_t1(&case.op, &cluster, &samples)?;
            let t2 = build_t2(&case.op, &cluster, &samples, T2Form::Collapsed)?;
            let a = asymptotic_expansion(&cluster, &t1, &t2, default_group_tol(cluster.lambda_big))?;
            let residual: Vec<f64> = deltas
                .iter()
                .zip(&shifted)
                .map(|(d, vals)| {
                    let pred = sorted(
                        a.branches
                            .iter()
                            .map(|b| cluster.lambda_omega + b.a1 * d + b.a2 * d * d)
                            .collect(),
                    );
                    let actual = sorted(vals[w.clone()].to_vec());
                    pred.iter().zip(&actual).map(|(p, v)| (p - v).abs()).fold(0.0, f64::max)
                })
                .collect();
            for r in residual.windows(2) {
                ratio = ratio.max(r[1] / r[0]);
            }
        }
    }
    Ok((
        derivative <= GENERAL_TOL && ratio <= RESIDUAL_RATIO,
        format!(
            "λ′ vs oracle max rel err {derivative:.2e} (tol {GENERAL_TOL:e}); worst residual ratio {ratio:.3} (max {RESIDUAL_RATIO})"
        ),
    ))
}

pub fn degenerate_splitting() -> Verdict {
    let (case, w) = splitting_case()?;
    let formula = formula_dlam(&case, &w)?;
    let oracle = oracle_dlam(&case, &w)?;
    let err = max_rel(&formula, &oracle);
    Ok((
        err <= SPLITTING_TOL,
        format!("λ′ {formula:.6?} vs oracle {oracle:.6?}, max rel err {err:.2e} (tol {SPLITTING_TOL:e})"),
    ))
}

/// Crossing-form eigenvalues of a window, each exactly degenerate
/// sub-window taken as its own crossing.
fn mqq_values(case: &Case, w: &Range<usize>) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut start = w.start;
    for i in w.start + 1..=w.end {
        let v = &case.spec.values;
        if i < w.end && v[i] - v[i - 1] <= EXACT * v[i].abs().max(1.0) {
            continue;
        }
        let sub = start..i;
        start = i;
        let cluster = window_cluster(&case.op, &case.spec, &sub)?;
        let form = crossing_form(&case.problem, &case.op, &cluster, cluster.lambda_omega, FormRoute::Mqq)?;
        out.extend(symmetric_eigen(&form.matrix).values.iter());
    }
    Ok(sorted(out))
}

pub fn bridge() -> Verdict {
    let mut cases = scaling_cases()?;
    cases.push(constant_case()?);
    cases.extend(general_cases()?);
    let (split, sw) = splitting_case()?;
    let mut worst = 0.0f64;
    let mut worst_case = String::new();
    let mut checked = 0;
    let mut check = |case: &Case, w: &Range<usize>| -> Result<()> {
        let form = mqq_values(case, w)?;
        let oracle: Vec<f64> = oracle_dlam(case, w)?.iter().map(|d| case.t0 * d).collect();
        let err = max_rel(&form, &oracle);
        if !(err <= worst) {
            worst = err;
            worst_case = case.label.clone();
        }
        checked += form.len();
        Ok(())
    };
    for case in &cases {
        for w in &case.windows {
            check(case, w)?;
        }
    }
    check(&split, &sw)?;
    Ok((
        worst <= BRIDGE_TOL,
        format!(
            "{checked} branches over {} configurations, max rel err {worst:.2e} at {worst_case} (tol {BRIDGE_TOL:e})",
            cases.len() + 1
        ),
    ))
}
