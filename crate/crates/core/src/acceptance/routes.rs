use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{disc_mesh, window_cluster, Case, Verdict};
use crate::assembly::{BoundaryCondition, FlowProblem, MatrixPotential};
use crate::error::{Error, Result};
use crate::geometry::{build_domain, build_mesh, BoundarySpec, TriMesh};
use crate::linalg::dense::symmetric_eigen;
use crate::maslov::{crossing_form, maslov_index, spectral_count, FormRoute};
use crate::spectra::{lowest, SolverOptions};

/// Allowed relative deviation of the boundary route from `−2λ` at `h = 0.05`.
pub const BOUNDARY_COARSE: f64 = 0.10;
/// Same at `h = 0.0125`.
pub const BOUNDARY_FINE: f64 = 0.03;
pub const SIGN_CONFIGS: usize = 50;
pub const MASLOV_RUNS: usize = 20;

fn boundary_deviation(h: f64) -> Result<(f64, f64)> {
    let p = FlowProblem::new(disc_mesh(h)?, MatrixPotential::zero(1), BoundaryCondition::Dirichlet)?;
    let op = p.assemble(1.0)?;
    let spec = lowest(&op, 2, &SolverOptions::default())?;
    let cluster = window_cluster(&op, &spec, &(0..1))?;
    let lambda = cluster.lambda_omega;
    let form = crossing_form(&p, &op, &cluster, lambda, FormRoute::Boundary)?;
    let v = form.matrix[(0, 0)];
    Ok((v, (v + 2.0 * lambda).abs() / (2.0 * lambda)))
}

fn random_smooth_domain(rng: &mut ChaCha8Rng) -> BoundarySpec<f64> {
    let a = rng.random_range(0.0..0.2);
    let k = rng.random_range(2..=4) as f64;
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    BoundarySpec::Radial {
        profile: Arc::new(move |th: f64| 1.0 + a * (k * th + phi).cos()),
        samples: 256,
    }
}

fn random_gaussian(rng: &mut ChaCha8Rng) -> MatrixPotential<f64> {
    let amp = rng.random_range(-6.0..6.0);
    let c = [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)];
    MatrixPotential::gaussian(amp, c, rng.random_range(0.2..0.5))
}

fn mesh(spec: &BoundarySpec<f64>, h: f64, seed: u64) -> Result<Arc<TriMesh<f64>>> {
    Ok(Arc::new(build_mesh(&build_domain(spec)?, h, seed)?))
}

pub fn boundary_route(seed: u64) -> Verdict {
    let (coarse_v, coarse) = boundary_deviation(0.05)?;
    let (fine_v, fine) = boundary_deviation(0.0125)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tested = 0;
    let mut positive = 0;
    let mut largest = f64::NEG_INFINITY;
    for i in 0..SIGN_CONFIGS {
        let spec = random_smooth_domain(&mut rng);
        let v = if i % 5 == 4 {
            MatrixPotential::coupled(rng.random_range(0.5..3.0), rng.random_range(2.0..6.0), rng.random_range(0.2..1.0))
        } else {
            random_gaussian(&mut rng)
        };
        let t0 = rng.random_range(0.5..1.0);
        let j = rng.random_range(0..3);
        let p = FlowProblem::new(mesh(&spec, 0.1, i as u64)?, v, BoundaryCondition::Dirichlet)?;
        let case = Case::new(format!("sign {i}"), p, t0, j + 1, 1e-10)?;
        let w = case.windows.iter().find(|w| w.contains(&j)).cloned().unwrap_or(j..j + 1);
        let cluster = case.cluster(&w)?;
        let form = crossing_form(&case.problem, &case.op, &cluster, cluster.lambda_omega, FormRoute::Boundary)?;
        for v in symmetric_eigen(&form.matrix).values.iter() {
            tested += 1;
            largest = largest.max(*v);
            if *v >= 0.0 {
                positive += 1;
            }
        }
    }
    let passed = coarse <= BOUNDARY_COARSE && fine <= BOUNDARY_FINE && positive == 0 && tested >= SIGN_CONFIGS;
    Ok((
        passed,
        format!(
            "h=0.05: {coarse_v:.4} off by {coarse:.2e} (max {BOUNDARY_COARSE}); h=0.0125: {fine_v:.4} off by {fine:.2e} (max {BOUNDARY_FINE}); \
             {positive} non-negative of {tested} form eigenvalues over {SIGN_CONFIGS} configurations (largest {largest:.3e})"
        ),
    ))
}

fn random_sweep_domain(rng: &mut ChaCha8Rng) -> BoundarySpec<f64> {
    match rng.random_range(0..3) {
        0 => BoundarySpec::centered_square(1.0),
        1 => BoundarySpec::centered_rectangle(rng.random_range(0.8..1.3), rng.random_range(0.8..1.3)),
        _ => random_smooth_domain(rng),
    }
}

/// `λ0` with 1 to 3 predicted crossings on `[0.5, 1]`, kept away from the
/// endpoint spectra.
fn pick_lambda0(problem: &FlowProblem<f64>, rng: &mut ChaCha8Rng) -> Result<Option<f64>> {
    let at = |t: f64| -> Result<Vec<f64>> {
        let op = problem.assemble(t)?;
        Ok(lowest(&op, 6, &SolverOptions::default())?
            .values
            .iter()
            .map(|v| v / (t * t))
            .collect())
    };
    let (one, half) = (at(1.0)?, at(0.5)?);
    for _ in 0..200 {
        let l = rng.random_range(one[0]..one[5]);
        let clear = one.iter().chain(&half).all(|v| (v - l).abs() > 1e-3 * l.abs().max(1.0));
        let predicted = one.iter().zip(&half).filter(|(a, b)| **a < l && l < **b).count();
        if clear && (1..=3).contains(&predicted) {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

pub fn maslov_consistency(seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37);
    let mut runs = 0;
    let mut matches = 0;
    let mut crossings = 0;
    let mut mismatches = Vec::new();
    let mut attempt = 0u64;
    while runs < MASLOV_RUNS && attempt < 4 * MASLOV_RUNS as u64 {
        attempt += 1;
        let spec = random_sweep_domain(&mut rng);
        let p = FlowProblem::new(mesh(&spec, 0.1, attempt)?, random_gaussian(&mut rng), BoundaryCondition::Dirichlet)?;
        let Some(lambda0) = pick_lambda0(&p, &mut rng)? else {
            continue;
        };
        let count = spectral_count(&p, lambda0, (0.5, 1.0))?;
        let result = match maslov_index(&p, lambda0, (0.5, 1.0), 24) {
            Err(Error::GridTooCoarse(_)) => maslov_index(&p, lambda0, (0.5, 1.0), 64)?,
            other => other?,
        };
        runs += 1;
        crossings += result.crossings.len();
        if -result.index == count && (1..=3).contains(&count) {
            matches += 1;
        } else {
            mismatches.push(format!("λ0={lambda0:.4}: index {} count {count}", result.index));
        }
    }
    Ok((
        runs >= MASLOV_RUNS && matches == runs,
        format!(
            "{matches}/{runs} runs with −index = spectral count ({crossings} crossings){}",
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; mismatches: {}", mismatches.join(", "))
            }
        ),
    ))
}
