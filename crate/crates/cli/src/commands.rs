use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;
use spectral_flow::acceptance::{self, Outcome};
use spectral_flow::assembly::potential_t_derivatives;
use spectral_flow::linalg::dense::symmetric_eigen;
use spectral_flow::maslov::{crossing_form, maslov_index, spectral_count, CrossingReport, FormRoute};
use spectral_flow::oracle::fd_branch_derivatives;
use spectral_flow::perturbation::{
    asymptotic_expansion, build_t1, build_t2, first_derivatives, AsymptoticReport, DerivativeReport, RouteTag,
    T2Form,
};
use spectral_flow::spectra::{form_cluster, lowest, ClusterSummary, SolverOptions};
use spectral_flow::{build_domain, build_mesh, BoundaryCondition, Error, FlowProblem, TriMesh};

use crate::config::Loaded;
use crate::error::CliError;

/// Settings shared by every subcommand.
pub struct Context {
    pub command: &'static str,
    pub out: PathBuf,
    pub seed: u64,
    pub config_path: Option<PathBuf>,
    pub started: Instant,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    DegenerateCrossing { t0: f64, smallest: f64, message: String },
    RouteSkipped { route: String, message: String },
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    timestamp_unix: u64,
    elapsed_seconds: f64,
    seed: u64,
    threads: usize,
    config: Option<String>,
    outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Vec<(u8, f64)>>,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<S: Serialize>(&self, name: &str, value: &S) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }

    fn finish(&self, outputs: &[PathBuf], timings: Option<Vec<(u8, f64)>>) -> Result<(), CliError> {
        let meta = Metadata {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            seed: self.seed,
            threads: rayon::current_num_threads(),
            config: self.config_path.as_ref().map(|p| p.display().to_string()),
            outputs: outputs.iter().map(|p| file_name(p)).collect(),
            timings,
        };
        self.write_json(&format!("{}.metadata.json", self.command), &meta)?;
        Ok(())
    }
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn build(cfg: &Loaded, seed: u64) -> Result<(Arc<TriMesh>, FlowProblem), CliError> {
    let domain = build_domain(&cfg.domain()?)?;
    let mesh = Arc::new(build_mesh(&domain, cfg.h(), seed)?);
    let potential = cfg.potential()?;
    let bc = cfg.bc(potential.components())?;
    let problem = FlowProblem::new(mesh.clone(), potential, bc)?;
    Ok((mesh, problem))
}

#[derive(Serialize)]
struct MeshSummary {
    nodes: usize,
    triangles: usize,
    boundary_edges: usize,
    h: f64,
    max_edge_length: f64,
    area: f64,
    perimeter: f64,
    smooth_boundary: bool,
}

pub fn mesh(ctx: &Context, cfg: &Loaded) -> Result<(), CliError> {
    let domain = build_domain(&cfg.domain()?)?;
    let mesh = build_mesh(&domain, cfg.h(), ctx.seed)?;
    let text = ctx.path("mesh.txt");
    std::fs::write(&text, mesh.to_text())?;
    let summary = MeshSummary {
        nodes: mesh.num_nodes(),
        triangles: mesh.triangles.len(),
        boundary_edges: mesh.boundary_edges.len(),
        h: mesh.h,
        max_edge_length: mesh.max_edge_length(),
        area: mesh.area(),
        perimeter: mesh.perimeter(),
        smooth_boundary: mesh.smooth_boundary,
    };
    let json = ctx.write_json("mesh.json", &summary)?;
    println!(
        "mesh: {} nodes, {} triangles, area {:.12}",
        summary.nodes, summary.triangles, summary.area
    );
    ctx.finish(&[text, json], None)
}

/// `t` grid of `n` equally spaced points on `[τ, 1]`.
pub fn grid(interval: (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = interval;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

pub fn flow(ctx: &Context, cfg: &Loaded) -> Result<(), CliError> {
    let (_, problem) = build(cfg, ctx.seed)?;
    let ts = grid(cfg.interval(), cfg.grid_n());
    let rows: Vec<Vec<f64>> = ts
        .par_iter()
        .map(|&t| -> Result<Vec<f64>, Error> {
            let op = problem.assemble(t)?;
            let k = cfg.branches().min(op.nfree());
            Ok(lowest(&op, k, &SolverOptions::default())?.values)
        })
        .collect::<Result<_, _>>()?;
    let path = ctx.path("flow.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["t", "j", "Lambda", "lambda"])?;
    for (t, values) in ts.iter().zip(&rows) {
        for (j, v) in values.iter().enumerate() {
            w.write_record([t.to_string(), (j + 1).to_string(), v.to_string(), (v / (t * t)).to_string()])?;
        }
    }
    w.flush()?;
    println!("flow: {} grid points × {} branches", ts.len(), rows.first().map_or(0, Vec::len));
    ctx.finish(&[path], None)
}

#[derive(Serialize)]
struct Deviation {
    route: String,
    /// `|route − dlam|` per branch
    abs: Vec<f64>,
    rel: Vec<f64>,
}

#[derive(Serialize)]
struct DerivativeOutput {
    index: usize,
    cluster: ClusterSummary,
    derivative: DerivativeReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    asymptotic: Option<AsymptoticReport>,
    deviations: Vec<Deviation>,
    warnings: Vec<Warning>,
}

fn deviation(route: &str, values: &[f64], dlam: &[f64]) -> Deviation {
    let abs: Vec<f64> = values.iter().zip(dlam).map(|(v, d)| (v - d).abs()).collect();
    let rel = abs.iter().zip(dlam).map(|(a, d)| a / d.abs().max(f64::MIN_POSITIVE)).collect();
    Deviation {
        route: route.into(),
        abs,
        rel,
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn skipped(route: &str, e: &Error) -> Warning {
    Warning::RouteSkipped {
        route: route.into(),
        message: e.to_string(),
    }
}

pub fn derivative(ctx: &Context, cfg: &Loaded) -> Result<(), CliError> {
    let (mesh, problem) = build(cfg, ctx.seed)?;
    let index = cfg.index()?;
    let t0 = cfg.t0();
    let op = problem.assemble(t0)?;
    let k = (index + 6).min(op.nfree());
    if index > k {
        return Err(CliError::Validation {
            field: "target.index".into(),
            line: None,
            message: format!("only {} eigenvalues exist on this mesh", op.nfree()),
        });
    }
    let spec = lowest(&op, k, &SolverOptions::default())?;
    let target = spec.values[index - 1];
    let tol = cfg.cluster_tol() * target.abs().max(1.0);
    let cluster = form_cluster(&spec, &op.m, t0, target, tol)?;
    let window: Range<usize> = {
        let inside: Vec<usize> = (0..spec.len()).filter(|&i| (spec.values[i] - target).abs() <= tol).collect();
        inside[0]..inside[inside.len() - 1] + 1
    };
    let mut warnings = Vec::new();
    let (samples, with_second) = match potential_t_derivatives(&problem.potential, t0, problem.quadrature_points(), true) {
        Ok(s) => (s, true),
        Err(Error::MissingDerivative(m)) => {
            warnings.push(Warning::RouteSkipped {
                route: "asymptotic expansion".into(),
                message: m,
            });
            (potential_t_derivatives(&problem.potential, t0, problem.quadrature_points(), false)?, false)
        }
        Err(e) => return Err(e.into()),
    };
    let t1 = build_t1(&op, &cluster, &samples)?;
    let mut report = first_derivatives(&cluster, &t1);
    let dlam = report.dlam.clone();
    let mut deviations = Vec::new();
    let lambda = cluster.lambda_omega;

    let routes = [
        ("crossing form", FormRoute::Mqq),
        ("boundary integral", FormRoute::Boundary),
    ];
    for (name, route) in routes {
        if route == FormRoute::Boundary && !mesh.smooth_boundary {
            warnings.push(Warning::RouteSkipped {
                route: name.into(),
                message: "polygonal boundary has no pointwise normal derivative".into(),
            });
            continue;
        }
        match crossing_form(&problem, &op, &cluster, lambda, route) {
            Ok(form) => {
                let values = sorted(symmetric_eigen(&form.matrix).values.iter().copied().collect());
                let per_t: Vec<f64> = values.iter().map(|v| v / t0).collect();
                deviations.push(deviation(name, &per_t, &dlam));
                report.route_tags.push(RouteTag {
                    quantity: if route == FormRoute::Mqq { "crossing_form" } else { "boundary_integral" }.into(),
                    route: format!("{name} eigenvalues, t0·λ′"),
                });
                match route {
                    FormRoute::Mqq => report.crossing_form = Some(values),
                    FormRoute::Boundary => report.boundary_integral = Some(values),
                }
            }
            Err(e) => warnings.push(skipped(name, &e)),
        }
    }

    let steps: Vec<f64> = cfg.fd_steps().iter().map(|s| s * t0).collect();
    match fd_branch_derivatives(&problem, t0, window, &steps) {
        Ok(fd) => {
            let d1 = fd.sorted_d1();
            deviations.push(deviation("finite-difference oracle", &d1, &dlam));
            report.route_tags.push(RouteTag {
                quantity: "oracle".into(),
                route: "Richardson-extrapolated central differences of the discrete branches".into(),
            });
            report.oracle = Some(d1);
        }
        Err(e) => warnings.push(skipped("finite-difference oracle", &e)),
    }

    let asymptotic = if with_second {
        let group_tol = cfg.group_tol() * cluster.lambda_big.abs().max(1.0);
        match build_t2(&op, &cluster, &samples, T2Form::Collapsed)
            .and_then(|t2| asymptotic_expansion(&cluster, &t1, &t2, group_tol))
        {
            Ok(a) => Some(a),
            Err(e) => {
                warnings.push(skipped("asymptotic expansion", &e));
                None
            }
        }
    } else {
        None
    };

    let out = DerivativeOutput {
        index,
        cluster: cluster.summary(),
        derivative: report,
        asymptotic,
        deviations,
        warnings,
    };
    for w in &out.warnings {
        eprintln!("warning: {}", serde_json::to_string(w)?);
    }
    println!("derivative: λ = {:.10}, λ′ = {:?}", out.derivative.lambda_omega, out.derivative.dlam);
    let path = ctx.write_json("derivative.json", &out)?;
    ctx.finish(&[path], None)
}

#[derive(Serialize)]
struct MaslovOutput {
    lambda0: f64,
    interval: (f64, f64),
    grid_n: usize,
    /// omitted when a crossing is degenerate
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<i64>,
    crossings: Vec<CrossingReport>,
    /// `N(b) − N(a)`, Dirichlet only
    #[serde(skip_serializing_if = "Option::is_none")]
    spectral_count: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistent: Option<bool>,
    warnings: Vec<Warning>,
}

pub fn maslov(ctx: &Context, cfg: &Loaded) -> Result<(), CliError> {
    let (_, problem) = build(cfg, ctx.seed)?;
    let lambda0 = cfg.lambda0()?;
    let interval = cfg.interval();
    let count = match problem.bc {
        BoundaryCondition::Dirichlet => Some(spectral_count(&problem, lambda0, interval)?),
        _ => None,
    };
    let mut out = MaslovOutput {
        lambda0,
        interval,
        grid_n: cfg.grid_n(),
        index: None,
        crossings: Vec::new(),
        spectral_count: count,
        consistent: None,
        warnings: Vec::new(),
    };
    match maslov_index(&problem, lambda0, interval, cfg.grid_n()) {
        Ok(r) => {
            out.consistent = count.map(|c| c == -r.index);
            out.index = Some(r.index);
            out.crossings = r.crossings;
        }
        Err(e @ Error::DegenerateCrossing { t0, smallest }) => {
            let w = Warning::DegenerateCrossing {
                t0,
                smallest,
                message: e.to_string(),
            };
            eprintln!("warning: {}", serde_json::to_string(&w)?);
            out.warnings.push(w);
        }
        Err(e) => return Err(e.into()),
    }
    match out.index {
        Some(i) => println!("maslov: index {i} from {} crossings", out.crossings.len()),
        None => println!("maslov: index omitted, degenerate crossing"),
    }
    let path = ctx.write_json("maslov.json", &out)?;
    ctx.finish(&[path], None)
}

#[derive(Serialize)]
struct VerifyEntry<'a> {
    id: u8,
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

pub fn verify(ctx: &Context, only: &[u8]) -> Result<(), CliError> {
    let ids: Vec<u8> = if only.is_empty() { (1..=9).collect() } else { only.to_vec() };
    if let Some(bad) = ids.iter().find(|i| !(1..=9).contains(*i)) {
        return Err(CliError::Validation {
            field: "--criterion".into(),
            line: None,
            message: format!("no criterion {bad}; expected 1 to 9"),
        });
    }
    let outcomes: Vec<Outcome> = ids
        .iter()
        .map(|&id| {
            let o = acceptance::run(id, ctx.seed);
            println!("{o}");
            o
        })
        .collect();
    let entries: Vec<VerifyEntry> = outcomes
        .iter()
        .map(|o| VerifyEntry {
            id: o.id,
            name: o.name,
            passed: o.passed,
            detail: &o.detail,
        })
        .collect();
    let path = ctx.write_json("verify.json", &entries)?;
    ctx.finish(&[path], Some(outcomes.iter().map(|o| (o.id, o.seconds)).collect()))?;
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("criteria failed: {}", failed.join(", "))))
    }
}
