//! Acceptance suite: one runner per criterion, each returning a pass/fail
//! [`Outcome`] with the measured deviation against its pinned tolerance.

mod derivatives;
mod identities;
mod routes;

use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::assembly::{AssembledOperator, FlowProblem};
use crate::error::Result;
use crate::geometry::{build_domain, build_mesh, BoundarySpec, TriMesh};
use crate::spectra::{form_cluster, lowest, EigenCluster, SolverOptions, Spectrum};

pub use derivatives::{
    bridge, constant_shift, degenerate_splitting, general_potentials, scaling_law, BRIDGE_TOL, CONSTANT_FD_TOL,
    CONSTANT_TOL, GENERAL_TOL, RESIDUAL_RATIO, SCALING_TOL, SPLITTING_TOL,
};
pub use identities::{projection_identities, t2_self_consistency, LINEARITY_BAND, PROJECTION_TOL, T2_TOL};
pub use routes::{
    boundary_route, maslov_consistency, BOUNDARY_COARSE, BOUNDARY_FINE, MASLOV_RUNS, SIGN_CONFIGS,
};

/// Result of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "criterion {} {} {}: {} [{:.1}s]",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub const NAMES: [&str; 9] = [
    "scaling law",
    "constant-shift second order",
    "general-potential oracle equivalence",
    "degenerate splitting",
    "crossing-form bridge",
    "boundary-integral route",
    "maslov index consistency",
    "projection and transformation identities",
    "second-order operator self-consistency",
];

/// Runs criterion `id` (1 to 9). `seed` drives the randomized criteria.
pub fn run(id: u8, seed: u64) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => scaling_law(),
        2 => constant_shift(),
        3 => general_potentials(),
        4 => degenerate_splitting(),
        5 => bridge(),
        6 => boundary_route(seed),
        7 => maslov_consistency(seed),
        8 => projection_identities(),
        9 => t2_self_consistency(seed),
        _ => Err(crate::error::Error::InvalidInput(format!("no criterion {id}"))),
    };
    let (passed, detail) = match res {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(seed: u64) -> Vec<Outcome> {
    (1..=9).map(|id| run(id, seed)).collect()
}

pub(crate) type Verdict = Result<(bool, String)>;

pub(crate) fn disc_mesh(h: f64) -> Result<Arc<TriMesh<f64>>> {
    let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 256))?;
    Ok(Arc::new(build_mesh(&d, h, 0)?))
}

pub(crate) fn square_mesh(h: f64) -> Result<Arc<TriMesh<f64>>> {
    let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0))?;
    Ok(Arc::new(build_mesh(&d, h, 0)?))
}

/// A problem at a time `t0` with the spectral windows under test.
pub(crate) struct Case {
    pub label: String,
    pub problem: FlowProblem<f64>,
    pub t0: f64,
    pub op: AssembledOperator<f64>,
    pub spec: Spectrum<f64>,
    pub windows: Vec<Range<usize>>,
}

impl Case {
    /// Windows of the lowest `count` eigenvalues, neighbours within
    /// `rel·max(1, |Λ|)` grouped together.
    pub fn new(label: impl Into<String>, problem: FlowProblem<f64>, t0: f64, count: usize, rel: f64) -> Result<Self> {
        let op = problem.assemble(t0)?;
        let spec = lowest(&op, count + 2, &SolverOptions::default())?;
        let windows = group(&spec.values, count, rel);
        Ok(Self {
            label: label.into(),
            problem,
            t0,
            op,
            spec,
            windows,
        })
    }

    pub fn cluster(&self, w: &Range<usize>) -> Result<EigenCluster<f64>> {
        window_cluster(&self.op, &self.spec, w)
    }
}

pub(crate) fn group(values: &[f64], count: usize, rel: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > rel * values[i].abs().max(1.0) {
            if start < count && i < values.len() {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

pub(crate) fn window_cluster(
    op: &AssembledOperator<f64>,
    spec: &Spectrum<f64>,
    w: &Range<usize>,
) -> Result<EigenCluster<f64>> {
    let vals = &spec.values[w.clone()];
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    form_cluster(spec, &op.m, op.t, mean, spread + 1e-10 * mean.abs().max(1.0))
}

pub(crate) fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub(crate) fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Largest relative deviation; infinite when the lengths differ.
pub(crate) fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.is_empty() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| rel(*x, *y)).fold(0.0, f64::max)
}
