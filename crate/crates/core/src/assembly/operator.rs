use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::boundary::{BcKind, BoundaryCondition};
use super::potential::MatrixPotential;
use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use crate::linalg::dense::symmetric_norm;
use crate::linalg::{dense, CsrMatrix};
use crate::scalar::{dot2, Point, Real};

const CHUNK: usize = 512;

/// Barycentric coordinates of the 3-point rule (degree 2, equal weights).
fn triangle_rule<T: Real>() -> [[T; 3]; 3] {
    let (a, b) = (T::lit(2.0 / 3.0), T::lit(1.0 / 6.0));
    [[a, b, b], [b, a, b], [b, b, a]]
}

/// Positions along an edge of the 2-point Gauss rule (equal weights).
fn edge_rule<T: Real>() -> [T; 2] {
    let d = T::lit(0.5 / 3f64.sqrt());
    [T::lit(0.5) - d, T::lit(0.5) + d]
}

/// Quadrature points of every triangle, three per triangle in triangle order.
pub fn quadrature_points<T: Real>(mesh: &TriMesh<T>) -> Vec<Point<T>> {
    let rule = triangle_rule::<T>();
    let mut out = Vec::with_capacity(3 * mesh.triangles.len());
    for tri in &mesh.triangles {
        let p = tri.map(|i| mesh.nodes[i]);
        for b in &rule {
            out.push([
                b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
            ]);
        }
    }
    out
}

/// Quadrature points on the boundary, two per boundary edge in edge order.
pub fn boundary_quadrature_points<T: Real>(mesh: &TriMesh<T>) -> Vec<Point<T>> {
    let rule = edge_rule::<T>();
    let mut out = Vec::with_capacity(2 * mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let (a, b) = (mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]);
        for &s in &rule {
            out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    out
}

/// Gradients of the three barycentric basis functions and the area.
fn element_gradients<T: Real>(mesh: &TriMesh<T>, t: usize) -> Result<([Point<T>; 3], T)> {
    let [p0, p1, p2] = mesh.triangles[t].map(|i| mesh.nodes[i]);
    let area = mesh.triangle_area(t);
    if !(area > T::zero()) {
        return Err(Error::SingularElement(t));
    }
    let inv = T::one() / (area + area);
    Ok((
        [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ],
        area,
    ))
}

fn parallel_triplets<T, F>(count: usize, per_item: F) -> Result<Vec<(usize, usize, T)>>
where
    T: Real,
    F: Fn(usize, &mut Vec<(usize, usize, T)>) -> Result<()> + Sync,
{
    let chunks: Vec<Result<Vec<(usize, usize, T)>>> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut local = Vec::new();
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                per_item(i, &mut local)?;
            }
            Ok(local)
        })
        .collect();
    let mut out = Vec::new();
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

/// `∫ ∇u·∇v`, component-diagonal.
pub fn stiffness_matrix<T: Real>(mesh: &TriMesh<T>, n: usize) -> Result<CsrMatrix<T>> {
    let ndof = mesh.num_nodes() * n;
    let trip = parallel_triplets(mesh.triangles.len(), |t, out| {
        let (g, area) = element_gradients(mesh, t)?;
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let k = area * dot2(g[a], g[b]);
                for c in 0..n {
                    out.push((tri[a] * n + c, tri[b] * n + c, k));
                }
            }
        }
        Ok(())
    })?;
    Ok(CsrMatrix::from_triplets(ndof, ndof, &trip))
}

/// `∫ W(x) u·v` with `W` sampled at [`quadrature_points`] (three symmetric
/// `N×N` samples per triangle).
pub fn weighted_mass<T: Real>(mesh: &TriMesh<T>, n: usize, samples: &[DMatrix<T>]) -> Result<CsrMatrix<T>> {
    if samples.len() != 3 * mesh.triangles.len() {
        return Err(Error::InvalidInput(format!(
            "{} coefficient samples for {} triangles",
            samples.len(),
            mesh.triangles.len()
        )));
    }
    let rule = triangle_rule::<T>();
    let ndof = mesh.num_nodes() * n;
    let third = T::lit(1.0 / 3.0);
    let trip = parallel_triplets(mesh.triangles.len(), |t, out| {
        let area = mesh.triangle_area(t);
        if !(area > T::zero()) {
            return Err(Error::SingularElement(t));
        }
        let tri = mesh.triangles[t];
        let w = area * third;
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..n {
                    for d in 0..n {
                        let v: T = (0..3).map(|q| rule[q][a] * rule[q][b] * samples[3 * t + q][(c, d)]).sum();
                        out.push((tri[a] * n + c, tri[b] * n + d, w * v));
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(CsrMatrix::from_triplets(ndof, ndof, &trip))
}

pub fn mass_matrix<T: Real>(mesh: &TriMesh<T>, n: usize) -> Result<CsrMatrix<T>> {
    let id = DMatrix::<T>::identity(n, n);
    weighted_mass(mesh, n, &vec![id; 3 * mesh.triangles.len()])
}

/// `∫_{∂Ω} W(y) u·v ds` with `W` sampled at [`boundary_quadrature_points`].
pub fn weighted_boundary_mass<T: Real>(mesh: &TriMesh<T>, n: usize, samples: &[DMatrix<T>]) -> CsrMatrix<T> {
    let rule = edge_rule::<T>();
    let ndof = mesh.num_nodes() * n;
    let half = T::lit(0.5);
    let mut trip = Vec::new();
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        for (q, &s) in rule.iter().enumerate() {
            let phi = [T::one() - s, s];
            let w = &samples[2 * k + q];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..n {
                        for d in 0..n {
                            let v = half * e.length * phi[a] * phi[b] * w[(c, d)];
                            trip.push((e.nodes[a] * n + c, e.nodes[b] * n + d, v));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(ndof, ndof, &trip)
}

pub fn boundary_mass<T: Real>(mesh: &TriMesh<T>, n: usize) -> CsrMatrix<T> {
    let id = DMatrix::<T>::identity(n, n);
    weighted_boundary_mass(mesh, n, &vec![id; 2 * mesh.boundary_edges.len()])
}

/// `∫_{∂Ω} f(y)·φ_a ds` for every dof `a`.
fn boundary_load<T: Real>(mesh: &TriMesh<T>, n: usize, f: &(dyn Fn(Point<T>) -> DVector<T> + Send + Sync)) -> DVector<T> {
    let rule = edge_rule::<T>();
    let pts = boundary_quadrature_points(mesh);
    let half = T::lit(0.5);
    let mut out = DVector::zeros(mesh.num_nodes() * n);
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        for (q, &s) in rule.iter().enumerate() {
            let fv = f(pts[2 * k + q]);
            let phi = [T::one() - s, s];
            for a in 0..2 {
                for c in 0..n {
                    out[e.nodes[a] * n + c] += half * e.length * phi[a] * fv[c];
                }
            }
        }
    }
    out
}

/// Boundary form matrix of `Θ` and the semiboundedness constant `c_Θ`.
pub fn boundary_form<T: Real>(mesh: &TriMesh<T>, n: usize, bc: &BoundaryCondition<T>) -> Result<(CsrMatrix<T>, T)> {
    let ndof = mesh.num_nodes() * n;
    let robin = match bc {
        BoundaryCondition::Dirichlet => return Ok((CsrMatrix::zeros(ndof, ndof), T::zero())),
        BoundaryCondition::Robin(r) => r,
    };
    let pts = boundary_quadrature_points(mesh);
    let mut samples = Vec::with_capacity(pts.len());
    let mut c_theta = T::neg_infinity();
    for &y in &pts {
        let th = (robin.theta)(y);
        if th.nrows() != n || th.ncols() != n {
            return Err(Error::InvalidInput(format!("θ is {}x{}, expected {n}x{n}", th.nrows(), th.ncols())));
        }
        let (sym, asym) = dense::symmetrize(&th);
        if asym > T::lit(1e-12) * (T::one() + dense::max_abs(&th)) {
            return Err(Error::NotSelfadjoint(format!(
                "θ at ({}, {}) has asymmetry {:e}",
                y[0],
                y[1],
                asym.to_f64_lossy()
            )));
        }
        let top = dense::symmetric_eigen(&sym).values[n - 1];
        c_theta = c_theta.max(top);
        samples.push(sym);
    }
    let mut b = weighted_boundary_mass(mesh, n, &samples);
    if !robin.finite_rank.is_empty() {
        let mut trip: Vec<(usize, usize, T)> = b.triplets().collect();
        let mut bound = T::zero();
        for pair in &robin.finite_rank {
            let f = boundary_load(mesh, n, pair.f.as_ref());
            let g = boundary_load(mesh, n, pair.g.as_ref());
            let fn2 = l2_boundary_norm(mesh, n, pair.f.as_ref());
            let gn2 = l2_boundary_norm(mesh, n, pair.g.as_ref());
            bound += fn2 * gn2;
            let support: Vec<usize> = (0..ndof).filter(|&i| f[i] != T::zero() || g[i] != T::zero()).collect();
            for &i in &support {
                for &j in &support {
                    let v = g[i] * f[j];
                    if v != T::zero() {
                        trip.push((i, j, v));
                    }
                }
            }
        }
        b = CsrMatrix::from_triplets(ndof, ndof, &trip);
        let asym = b.asymmetry();
        if asym > T::lit(1e-12) * (T::one() + b.max_abs()) {
            return Err(Error::NotSelfadjoint(format!(
                "finite-rank part has asymmetry {:e}",
                asym.to_f64_lossy()
            )));
        }
        c_theta += bound;
    }
    Ok((b, c_theta))
}

fn l2_boundary_norm<T: Real>(mesh: &TriMesh<T>, n: usize, f: &(dyn Fn(Point<T>) -> DVector<T> + Send + Sync)) -> T {
    let pts = boundary_quadrature_points(mesh);
    let half = T::lit(0.5);
    let mut acc = T::zero();
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        for q in 0..2 {
            let v = f(pts[2 * k + q]);
            acc += half * e.length * (0..n).map(|c| v[c] * v[c]).sum::<T>();
        }
    }
    acc.sqrt()
}

/// Discrete realization of the rescaled form at one value of `t`.
///
/// Full matrices act on all `num_nodes · N` dofs (node-major, component
/// fastest). `a` and `m` are restricted to `free_dofs`, which excludes the
/// boundary dofs under Dirichlet conditions.
#[derive(Debug, Clone)]
pub struct AssembledOperator<T: Real> {
    pub t: T,
    pub ncomp: usize,
    pub bc: BcKind,
    pub mesh: Arc<TriMesh<T>>,
    pub stiffness: CsrMatrix<T>,
    pub mass: CsrMatrix<T>,
    /// `∫ V^t u·v`
    pub potential_mass: CsrMatrix<T>,
    /// `⟨Θγ_D u, γ_D v⟩`; zero under Dirichlet conditions
    pub boundary_form: CsrMatrix<T>,
    pub free_dofs: Vec<usize>,
    /// `K + M[V^t] − t B_θ` on free dofs
    pub a: CsrMatrix<T>,
    pub m: CsrMatrix<T>,
    /// `max |V^t|` over quadrature points
    pub potential_bound: T,
    pub c_theta: T,
}

impl<T: Real> AssembledOperator<T> {
    pub fn ndof(&self) -> usize {
        self.mass.nrows()
    }

    pub fn nfree(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn restrict(&self, full: &DVector<T>) -> DVector<T> {
        DVector::from_iterator(self.free_dofs.len(), self.free_dofs.iter().map(|&i| full[i]))
    }

    /// Zero extension of a free-dof vector.
    pub fn extend(&self, free: &DVector<T>) -> DVector<T> {
        let mut out = DVector::zeros(self.ndof());
        for (k, &i) in self.free_dofs.iter().enumerate() {
            out[i] = free[k];
        }
        out
    }

    pub fn extend_columns(&self, free: &DMatrix<T>) -> DMatrix<T> {
        let mut out = DMatrix::zeros(self.ndof(), free.ncols());
        for (k, &i) in self.free_dofs.iter().enumerate() {
            for c in 0..free.ncols() {
                out[(i, c)] = free[(k, c)];
            }
        }
        out
    }

    pub fn restrict_matrix(&self, full: &CsrMatrix<T>) -> CsrMatrix<T> {
        if self.free_dofs.len() == full.nrows() {
            full.clone()
        } else {
            full.principal_submatrix(&self.free_dofs)
        }
    }

    /// `K + M[V^t] − t B_θ` on all dofs, without boundary elimination.
    pub fn full_operator(&self) -> CsrMatrix<T> {
        self.stiffness
            .linear_combination(T::one(), &self.potential_mass, T::one())
            .linear_combination(T::one(), &self.boundary_form, -self.t)
    }

    /// Dofs of boundary nodes, in boundary-node order.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        let n = self.ncomp;
        self.mesh
            .boundary_nodes
            .iter()
            .flat_map(|&p| (0..n).map(move |c| p * n + c))
            .collect()
    }

    /// Shift `Λ` with `uᵀ(A + ΛM)u ≥ ‖u‖²_M` for every admissible `u`.
    ///
    /// Uses `∫_{∂Ω}|u|²(x·ν) = 2‖u‖² + 2∫u x·∇u` together with
    /// `x·ν ≥ ρ > 0` and `|x| ≤ R`; this identity holds exactly for
    /// piecewise linear `u`, so the bound is rigorous for the discrete form.
    pub fn form_shift(&self) -> T {
        let two = T::lit(2.0);
        let c = (self.t * self.c_theta).max(T::zero());
        let mut rho = T::infinity();
        let mut radius = T::zero();
        for e in &self.mesh.boundary_edges {
            let a = self.mesh.nodes[e.nodes[0]];
            rho = rho.min(dot2(e.normal, a));
            radius = radius.max(crate::scalar::norm2(a));
        }
        let beta = if c > T::zero() {
            // ‖γu‖² ≤ (1/ρ)(2‖u‖² + R(ε‖∇u‖² + ‖u‖²/ε)), ε chosen so c R ε/ρ = ½
            let eps = rho / (two * c * radius);
            (two + radius / eps) / rho
        } else {
            T::zero()
        };
        self.potential_bound + T::one() + c * beta
    }
}

/// Problem data independent of `t`, with the `t`-independent matrices
/// assembled once.
#[derive(Debug, Clone)]
pub struct FlowProblem<T: Real> {
    pub mesh: Arc<TriMesh<T>>,
    pub potential: MatrixPotential<T>,
    pub bc: BoundaryCondition<T>,
    stiffness: CsrMatrix<T>,
    mass: CsrMatrix<T>,
    boundary_form: CsrMatrix<T>,
    c_theta: T,
    free_dofs: Vec<usize>,
    quad_points: Vec<Point<T>>,
}

impl<T: Real> FlowProblem<T> {
    pub fn new(mesh: Arc<TriMesh<T>>, potential: MatrixPotential<T>, bc: BoundaryCondition<T>) -> Result<Self> {
        let n = potential.components();
        if n == 0 {
            return Err(Error::InvalidInput("potential has no components".into()));
        }
        let quad_points = quadrature_points(&mesh);
        let asym = potential.max_asymmetry(&quad_points);
        if asym > T::lit(1e-12) {
            return Err(Error::InvalidInput(format!(
                "potential is not symmetric: asymmetry {:e}",
                asym.to_f64_lossy()
            )));
        }
        let stiffness = stiffness_matrix(&mesh, n)?;
        let mass = mass_matrix(&mesh, n)?;
        let (boundary_form, c_theta) = boundary_form(&mesh, n, &bc)?;
        let ndof = mesh.num_nodes() * n;
        let free_dofs = match bc {
            BoundaryCondition::Dirichlet => (0..ndof).filter(|&i| !mesh.is_boundary_node(i / n)).collect(),
            BoundaryCondition::Robin(_) => (0..ndof).collect(),
        };
        Ok(Self {
            mesh,
            potential,
            bc,
            stiffness,
            mass,
            boundary_form,
            c_theta,
            free_dofs,
            quad_points,
        })
    }

    pub fn ncomp(&self) -> usize {
        self.potential.components()
    }

    pub fn quadrature_points(&self) -> &[Point<T>] {
        &self.quad_points
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn assemble(&self, t: T) -> Result<AssembledOperator<T>> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(Error::InvalidInput(format!("scale t = {t} must be positive")));
        }
        let n = self.ncomp();
        let samples: Vec<DMatrix<T>> = self.quad_points.par_iter().map(|&x| self.potential.scaled_value(t, x)).collect();
        let potential_bound = samples.iter().fold(T::zero(), |acc, v| {
            acc.max(if n == 1 { v[(0, 0)].abs() } else { symmetric_norm(v) })
        });
        let potential_mass = weighted_mass(&self.mesh, n, &samples)?;
        let full = self
            .stiffness
            .linear_combination(T::one(), &potential_mass, T::one())
            .linear_combination(T::one(), &self.boundary_form, -t);
        let (a, m) = if self.free_dofs.len() == full.nrows() {
            (full, self.mass.clone())
        } else {
            (
                full.principal_submatrix(&self.free_dofs),
                self.mass.principal_submatrix(&self.free_dofs),
            )
        };
        Ok(AssembledOperator {
            t,
            ncomp: n,
            bc: self.bc.kind(),
            mesh: self.mesh.clone(),
            stiffness: self.stiffness.clone(),
            mass: self.mass.clone(),
            potential_mass,
            boundary_form: self.boundary_form.clone(),
            free_dofs: self.free_dofs.clone(),
            a,
            m,
            potential_bound,
            c_theta: self.c_theta,
        })
    }

    /// `∫ W u·v` for a coefficient sampled at this problem's quadrature points.
    pub fn weighted_mass(&self, samples: &[DMatrix<T>]) -> Result<CsrMatrix<T>> {
        weighted_mass(&self.mesh, self.ncomp(), samples)
    }
}

/// One-shot assembly of the operator at scale `t`.
pub fn assemble<T: Real>(
    mesh: &Arc<TriMesh<T>>,
    potential: &MatrixPotential<T>,
    bc: &BoundaryCondition<T>,
    t: T,
) -> Result<AssembledOperator<T>> {
    FlowProblem::new(mesh.clone(), potential.clone(), bc.clone())?.assemble(t)
}

/// The discrete `Θ_D = γ_D^* Θ γ_D` on full nodal vectors.
pub fn theta_d_matrix<T: Real>(op: &AssembledOperator<T>) -> Result<CsrMatrix<T>> {
    match op.bc {
        BcKind::Dirichlet => Err(Error::WrongBc { expected: "Robin" }),
        BcKind::Robin => Ok(op.boundary_form.clone()),
    }
}

/// Discrete traces of a nodal function.
#[derive(Debug, Clone)]
pub struct TraceData<T: Real> {
    pub t: T,
    /// `γ_D u` at [`AssembledOperator::boundary_dofs`]
    pub dirichlet: DVector<T>,
    /// `(K + M[V^t] − ΛM)u` at the boundary dofs
    pub weak_neumann: DVector<T>,
    /// `ν·∇u` per boundary edge and component (`edge · N + c`)
    pub strong_neumann: Vec<T>,
    /// element gradient per boundary edge and component
    pub edge_gradients: Vec<Point<T>>,
}

impl<T: Real> TraceData<T> {
    /// Euclidean pairing `⟨weak_neumann, γ_D v⟩`.
    pub fn pair(&self, other: &TraceData<T>) -> T {
        self.weak_neumann.dot(&other.dirichlet)
    }

    /// `(γ_D u, t⁻¹ γ_N u)`.
    pub fn rescaled(&self) -> (DVector<T>, DVector<T>) {
        (self.dirichlet.clone(), &self.weak_neumann / self.t)
    }
}

/// Traces of the full nodal vector `u` for the eigenvalue `lambda` of the
/// rescaled pencil.
pub fn traces<T: Real>(op: &AssembledOperator<T>, u: &DVector<T>, lambda: T) -> TraceData<T> {
    let n = op.ncomp;
    let bd = op.boundary_dofs();
    let residual = op.stiffness.mul_vec(u) + op.potential_mass.mul_vec(u) - op.mass.mul_vec(u) * lambda;
    let dirichlet = DVector::from_iterator(bd.len(), bd.iter().map(|&i| u[i]));
    let weak_neumann = DVector::from_iterator(bd.len(), bd.iter().map(|&i| residual[i]));
    let mesh = &op.mesh;
    let mut strong_neumann = Vec::with_capacity(mesh.boundary_edges.len() * n);
    let mut edge_gradients = Vec::with_capacity(mesh.boundary_edges.len() * n);
    for e in &mesh.boundary_edges {
        let (g, _) = element_gradients(mesh, e.triangle).expect("validated mesh");
        let tri = mesh.triangles[e.triangle];
        for c in 0..n {
            let mut grad = [T::zero(), T::zero()];
            for a in 0..3 {
                let ua = u[tri[a] * n + c];
                grad[0] += ua * g[a][0];
                grad[1] += ua * g[a][1];
            }
            strong_neumann.push(dot2(e.normal, grad));
            edge_gradients.push(grad);
        }
    }
    TraceData {
        t: op.t,
        dirichlet,
        weak_neumann,
        strong_neumann,
        edge_gradients,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, build_mesh, BoundarySpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(h: f64) -> Arc<TriMesh<f64>> {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        Arc::new(build_mesh(&d, h, 0).unwrap())
    }

    fn ones(n: usize) -> DVector<f64> {
        DVector::from_element(n, 1.0)
    }

    #[test]
    fn stiffness_annihilates_constants_and_mass_integrates_area() {
        let mesh = square(0.2);
        let k = stiffness_matrix(&mesh, 2).unwrap();
        let m = mass_matrix(&mesh, 2).unwrap();
        let e = ones(mesh.num_nodes() * 2);
        assert!(k.mul_vec(&e).amax() < 1e-12);
        assert!((m.bilinear(&e, &e) - 2.0).abs() < 1e-12);
        assert!(k.asymmetry() < 1e-14 && m.asymmetry() < 1e-14);
    }

    #[test]
    fn robin_zero_theta_has_no_boundary_form() {
        let mesh = square(0.2);
        let v = MatrixPotential::linear([1.0, -0.5]);
        let op = assemble(&mesh, &v, &BoundaryCondition::neumann(1), 0.7).unwrap();
        let plain = op.stiffness.linear_combination(1.0, &op.potential_mass, 1.0);
        assert_eq!(op.a.linear_combination(1.0, &plain, -1.0).max_abs(), 0.0);
        assert_eq!(op.boundary_form.max_abs(), 0.0);
    }

    #[test]
    fn constant_theta_integrates_perimeter() {
        let mesh = square(0.15);
        let s = 2.5;
        let op = assemble(&mesh, &MatrixPotential::zero(1), &BoundaryCondition::robin_constant(1, s), 1.0).unwrap();
        let bm = boundary_mass(&mesh, 1);
        let e = ones(mesh.num_nodes());
        let row_total: f64 = bm.mul_vec(&e).iter().sum();
        assert!((row_total - 4.0).abs() < 1e-12);
        let theta_d = theta_d_matrix(&op).unwrap();
        assert!((theta_d.bilinear(&e, &e) - s * 4.0).abs() < 1e-10);
        assert!(theta_d.linear_combination(1.0, &bm, -s).max_abs() < 1e-14);
        assert_eq!(op.c_theta, s);
    }

    #[test]
    fn theta_d_requires_robin() {
        let mesh = square(0.25);
        let op = assemble(&mesh, &MatrixPotential::zero(1), &BoundaryCondition::Dirichlet, 1.0).unwrap();
        assert!(matches!(theta_d_matrix(&op), Err(Error::WrongBc { .. })));
        assert_eq!(op.nfree(), mesh.num_nodes() - mesh.boundary_nodes.len());
    }

    #[test]
    fn assembled_operator_is_symmetric() {
        let mesh = square(0.1);
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::robin_constant(2, 1.0)] {
            for t in [0.5, 0.8, 1.0] {
                let op = assemble(&mesh, &MatrixPotential::coupled(1.0, 2.0, 0.5), &bc, t).unwrap();
                assert!(op.a.asymmetry() <= 1e-12);
                assert!(op.full_operator().asymmetry() <= 1e-12);
            }
        }
    }

    #[test]
    fn strong_trace_of_linear_function_is_exact() {
        let mesh = square(0.2);
        let op = assemble(&mesh, &MatrixPotential::zero(1), &BoundaryCondition::neumann(1), 1.0).unwrap();
        let (a, b) = (1.7, -0.3);
        let u = DVector::from_iterator(mesh.num_nodes(), mesh.nodes.iter().map(|p| a * p[0] + b));
        let tr = traces(&op, &u, 0.0);
        for (e, &sn) in mesh.boundary_edges.iter().zip(&tr.strong_neumann) {
            assert!((sn - a * e.normal[0]).abs() < 1e-12);
        }
        for (k, &i) in op.boundary_dofs().iter().enumerate() {
            assert_eq!(tr.dirichlet[k], u[i]);
        }
    }

    #[test]
    fn weak_trace_pairs_like_the_form() {
        // for any u: ⟨g, γ_D u⟩ + interior residual·u = uᵀ(K + M[V] − λM)u
        let mesh = square(0.2);
        let op = assemble(&mesh, &MatrixPotential::constant(2.0), &BoundaryCondition::neumann(1), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = DVector::from_fn(mesh.num_nodes(), |_, _| rng.random::<f64>());
        let mut ub = DVector::zeros(mesh.num_nodes());
        for &i in &mesh.boundary_nodes {
            ub[i] = u[i];
        }
        let lam = 1.3;
        let tr = traces(&op, &u, lam);
        let b_only = traces(&op, &ub, lam);
        let full = op.stiffness.linear_combination(1.0, &op.potential_mass, 1.0).linear_combination(1.0, &op.mass, -lam);
        assert!((tr.weak_neumann.dot(&b_only.dirichlet) - full.bilinear(&u, &ub)).abs() < 1e-12);
    }

    #[test]
    fn form_shift_bounds_the_form_from_below() {
        let mesh = square(0.1);
        let bc = BoundaryCondition::robin_constant(1, 4.0);
        let op = assemble(&mesh, &MatrixPotential::gaussian(-3.0, [0.1, 0.0], 0.3), &bc, 0.9).unwrap();
        let shift = op.form_shift();
        let shifted = op.a.linear_combination(1.0, &op.m, shift);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u = DVector::from_fn(op.nfree(), |_, _| rng.random::<f64>() - 0.5);
            assert!(shifted.bilinear(&u, &u) >= op.m.bilinear(&u, &u));
        }
    }

    #[test]
    fn asymmetric_theta_is_rejected() {
        let mesh = square(0.25);
        let bc = BoundaryCondition::robin(Arc::new(|_y: Point<f64>| DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])));
        assert!(matches!(
            FlowProblem::new(mesh, MatrixPotential::zero(2), bc),
            Err(Error::NotSelfadjoint(_))
        ));
    }

    #[test]
    fn finite_rank_term_is_assembled_symmetrically() {
        use crate::assembly::{FiniteRankPair, Robin};
        let mesh = square(0.2);
        let f: super::super::BoundaryFunction<f64> = Arc::new(|y: Point<f64>| DVector::from_element(1, y[0]));
        let bc = BoundaryCondition::Robin(Robin {
            theta: Arc::new(|_| DMatrix::zeros(1, 1)),
            finite_rank: vec![FiniteRankPair { f: f.clone(), g: f }],
        });
        let op = assemble(&mesh, &MatrixPotential::zero(1), &bc, 1.0).unwrap();
        // u = x₁: ⟨Θu, u⟩ = (∫_{∂Ω} x₁² ds)², computed on the exact P1 interpolant
        let u = DVector::from_iterator(mesh.num_nodes(), mesh.nodes.iter().map(|p| p[0]));
        let side = 2.0 * 0.25 + 2.0 * (1.0 / 12.0);
        assert!((op.boundary_form.bilinear(&u, &u) - side * side).abs() < 1e-10);
        assert!(op.c_theta > 0.0);
    }
}
