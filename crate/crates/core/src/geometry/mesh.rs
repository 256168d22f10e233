//! Deterministic triangulation of star-shaped polygons.
//!
//! The mesh is a stack of rings: ring `k` of `K` is the boundary polygon
//! scaled by `k/K`, sampled at points of a common boundary parameter.
//! Neighbouring rings are zipped along the shorter diagonal, with exact
//! rational parameter order breaking ties, so a polygon with a rotational
//! symmetry that maps vertices to vertices yields a symmetric mesh.

use std::fmt::Write as _;

use super::domain::StarDomain;
use crate::error::{Error, Result};
use crate::scalar::{cross2, dot2, norm2, sub2, Point, Real};

/// A boundary edge oriented counter-clockwise, with its outward normal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge<T> {
    pub nodes: [usize; 2],
    pub normal: Point<T>,
    pub length: T,
    /// the unique triangle containing the edge
    pub triangle: usize,
}

impl<T: Real> BoundaryEdge<T> {
    pub fn midpoint(&self, nodes: &[Point<T>]) -> Point<T> {
        let (a, b) = (nodes[self.nodes[0]], nodes[self.nodes[1]]);
        [(a[0] + b[0]) * T::lit(0.5), (a[1] + b[1]) * T::lit(0.5)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh<T> {
    pub nodes: Vec<Point<T>>,
    /// counter-clockwise index triples
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge<T>>,
    /// sorted
    pub boundary_nodes: Vec<usize>,
    /// target maximum edge length
    pub h: T,
    /// boundary samples a smooth profile (not a genuine polygon)
    pub smooth_boundary: bool,
}

impl<T: Real> TriMesh<T> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        cross2(sub2(self.nodes[b], self.nodes[a]), sub2(self.nodes[c], self.nodes[a])) * T::lit(0.5)
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn perimeter(&self) -> T {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    pub fn max_edge_length(&self) -> T {
        let mut worst = T::zero();
        for tri in &self.triangles {
            for k in 0..3 {
                let d = norm2(sub2(self.nodes[tri[(k + 1) % 3]], self.nodes[tri[k]]));
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.boundary_nodes.binary_search(&i).is_ok()
    }

    /// Plain-text export: a `nodes` block with `index x y` records followed
    /// by a `triangles` block with `index a b c` records.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {:.17e} {:.17e}", p[0], p[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

/// Ring parameter `num/den`, measured in polygon vertices.
#[derive(Debug, Clone, Copy)]
struct Frac {
    num: u64,
    den: u64,
}

impl Frac {
    fn lt_eq(self, other: Frac) -> bool {
        (self.num as u128) * (other.den as u128) <= (other.num as u128) * (self.den as u128)
    }

    fn shifted(self, whole: u64) -> Frac {
        Frac {
            num: self.num + whole * self.den,
            den: self.den,
        }
    }
}

struct Ring {
    params: Vec<Frac>,
    first_node: usize,
}

fn ring_point<T: Real>(domain: &StarDomain<T>, phi: Frac, scale: T) -> Point<T> {
    let n = domain.vertices().len() as u64;
    let e = (phi.num / phi.den) % n;
    let f = T::lit((phi.num % phi.den) as f64) / T::lit(phi.den as f64);
    let a = domain.vertices()[e as usize];
    let b = domain.vertices()[((e + 1) % n) as usize];
    [
        scale * (a[0] + f * (b[0] - a[0])),
        scale * (a[1] + f * (b[1] - a[1])),
    ]
}

/// Triangulates `domain` with target edge length `h`. For smooth profiles
/// `seed` staggers the inner rings (half-step offsets); it is otherwise inert.
/// Identical inputs always produce identical meshes.
pub fn build_mesh<T: Real>(domain: &StarDomain<T>, h: T, seed: u64) -> Result<TriMesh<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::MeshFailure(format!("mesh size h = {h} must be positive")));
    }
    let verts = domain.vertices();
    let nv = verts.len();
    let edge_len: Vec<T> = (0..nv).map(|e| norm2(sub2(verts[(e + 1) % nv], verts[e]))).collect();
    let len_max = edge_len.iter().copied().fold(T::zero(), T::max);

    let rings_f = (domain.r_max() / h).ceil();
    let num_rings = rings_f.to_usize().unwrap_or(usize::MAX).max(1);
    if num_rings > 100_000 {
        return Err(Error::MeshFailure(format!("h = {h} too small for this domain")));
    }

    let mut nodes: Vec<Point<T>> = vec![[T::zero(), T::zero()]];
    let mut rings: Vec<Ring> = Vec::with_capacity(num_rings);
    for k in 1..=num_rings {
        let scale = T::count(k) / T::count(num_rings);
        let params: Vec<Frac> = if k == num_rings || !domain.is_smooth() {
            // polygon vertices plus uniform edge subdivision
            let mut p = Vec::new();
            for (e, len) in edge_len.iter().enumerate() {
                let s = (scale * *len / h).ceil().to_u64().unwrap_or(1).max(1);
                p.extend((0..s).map(|i| Frac {
                    num: e as u64 * s + i,
                    den: s,
                }));
            }
            p
        } else {
            let want = (T::count(nv) * scale * len_max / h).ceil().to_u64().unwrap_or(8);
            let count = want.max(8).div_ceil(4) * 4;
            let offset = (k as u64 + seed) % 2;
            (0..count)
                .map(|i| Frac {
                    num: nv as u64 * (2 * i + offset),
                    den: 2 * count,
                })
                .collect()
        };
        let first_node = nodes.len();
        nodes.extend(params.iter().map(|&phi| ring_point(domain, phi, scale)));
        rings.push(Ring { params, first_node });
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    // centre fan
    {
        let r = &rings[0];
        let n = r.params.len();
        for i in 0..n {
            triangles.push([0, r.first_node + i, r.first_node + (i + 1) % n]);
        }
    }
    let mut boundary_tri_of_edge: Vec<usize> = Vec::new();
    for k in 1..rings.len() {
        let (inner, outer) = (&rings[k - 1], &rings[k]);
        let (na, nb) = (inner.params.len(), outer.params.len());
        let is_boundary = k + 1 == rings.len();
        if is_boundary {
            boundary_tri_of_edge = vec![usize::MAX; nb];
        }
        let phi_a = |i: usize| inner.params[i % na].shifted((i / na) as u64 * nv as u64);
        let phi_b = |j: usize| outer.params[j % nb].shifted((j / nb) as u64 * nv as u64);
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let advance_outer = if i == na {
                true
            } else if j == nb {
                false
            } else {
                // shorter diagonal; parameter order breaks exact ties
                let p0 = nodes[inner.first_node + i % na];
                let q0 = nodes[outer.first_node + j % nb];
                let p1 = nodes[inner.first_node + (i + 1) % na];
                let q1 = nodes[outer.first_node + (j + 1) % nb];
                let (dq, dp) = (norm2(sub2(q1, p0)), norm2(sub2(p1, q0)));
                if dq == dp {
                    phi_b(j + 1).lt_eq(phi_a(i + 1))
                } else {
                    dq < dp
                }
            };
            let p = inner.first_node + i % na;
            let q = outer.first_node + j % nb;
            if advance_outer {
                if is_boundary {
                    boundary_tri_of_edge[j % nb] = triangles.len();
                }
                triangles.push([p, q, outer.first_node + (j + 1) % nb]);
                j += 1;
            } else {
                triangles.push([p, q, inner.first_node + (i + 1) % na]);
                i += 1;
            }
        }
    }

    let outer = rings.last().expect("at least one ring");
    let nb = outer.params.len();
    if num_rings == 1 {
        // the centre fan touches the boundary directly
        boundary_tri_of_edge = (0..nb).collect();
    }
    let boundary_nodes: Vec<usize> = (outer.first_node..outer.first_node + nb).collect();
    let mut boundary_edges = Vec::with_capacity(nb);
    for j in 0..nb {
        let (a, b) = (outer.first_node + j, outer.first_node + (j + 1) % nb);
        let d = sub2(nodes[b], nodes[a]);
        let length = norm2(d);
        let normal = [d[1] / length, -d[0] / length];
        boundary_edges.push(BoundaryEdge {
            nodes: [a, b],
            normal,
            length,
            triangle: boundary_tri_of_edge[j],
        });
    }

    let mesh = TriMesh {
        nodes,
        triangles,
        boundary_edges,
        boundary_nodes,
        h,
        smooth_boundary: domain.is_smooth(),
    };
    validate(&mesh, domain)?;
    Ok(mesh)
}

fn validate<T: Real>(mesh: &TriMesh<T>, domain: &StarDomain<T>) -> Result<()> {
    for t in 0..mesh.triangles.len() {
        let area = mesh.triangle_area(t);
        if !(area > T::zero()) {
            return Err(Error::MeshFailure(format!("triangle {t} has area {area:e}")));
        }
    }
    for (k, e) in mesh.boundary_edges.iter().enumerate() {
        if !(dot2(e.normal, e.midpoint(&mesh.nodes)) > T::zero()) {
            return Err(Error::MeshFailure(format!("boundary edge {k} violates ν·x > 0")));
        }
        let tri = mesh.triangles.get(e.triangle).ok_or_else(|| {
            Error::MeshFailure(format!("boundary edge {k} has no adjacent triangle"))
        })?;
        if !(tri.contains(&e.nodes[0]) && tri.contains(&e.nodes[1])) {
            return Err(Error::MeshFailure(format!("boundary edge {k} adjacency is wrong")));
        }
    }
    let exact = domain.area();
    let rel = ((mesh.area() - exact) / exact).abs();
    if rel > T::lit(1e-12).max(T::EPS * T::lit(64.0)) {
        return Err(Error::MeshFailure(format!("area defect {rel:e}")));
    }
    if mesh.max_edge_length() > T::lit(1.5) * mesh.h {
        return Err(Error::MeshFailure(format!(
            "max edge {:e} exceeds 1.5 h",
            mesh.max_edge_length().to_f64_lossy()
        )));
    }
    Ok(())
}

/// `{t x}` for every point.
pub fn scale_points<T: Real>(points: &[Point<T>], t: T) -> Vec<Point<T>> {
    points.iter().map(|p| [t * p[0], t * p[1]]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, BoundarySpec};
    use std::collections::HashMap;

    fn edge_use(mesh: &TriMesh<f64>) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    #[test]
    fn square_mesh_is_exact_and_conforming() {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        let mesh = build_mesh(&d, 0.25, 0).unwrap();
        assert!((mesh.area() - 1.0).abs() < 1e-12);
        assert!((mesh.perimeter() - 4.0).abs() < 1e-12);
        // conforming: interior edges shared by two triangles, boundary by one
        let uses = edge_use(&mesh);
        let boundary: usize = uses.values().filter(|&&c| c == 1).count();
        assert_eq!(boundary, mesh.boundary_edges.len());
        assert!(uses.values().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn disc_area_within_one_percent() {
        let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 256)).unwrap();
        let mesh = build_mesh(&d, 0.1, 0).unwrap();
        let pi = std::f64::consts::PI;
        // inscribed 256-gon defect
        let n = 256.0;
        let polygon = 0.5 * n * (2.0 * pi / n).sin();
        assert!((mesh.area() - polygon).abs() < 1e-12);
        assert!((mesh.area() - pi).abs() / pi < 0.01);
        assert!(mesh.max_edge_length() <= 0.15);
    }

    #[test]
    fn invalid_h_is_rejected() {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        assert!(matches!(build_mesh(&d, 0.0, 0), Err(Error::MeshFailure(_))));
        assert!(build_mesh(&d, -1.0, 0).is_err());
    }

    #[test]
    fn meshing_is_deterministic_and_salted() {
        let d = build_domain(&BoundarySpec::<f64>::disc(1.0, 256)).unwrap();
        let a = build_mesh(&d, 0.2, 3).unwrap();
        let b = build_mesh(&d, 0.2, 3).unwrap();
        assert_eq!(a, b);
        let c = build_mesh(&d, 0.2, 4).unwrap();
        assert_ne!(a.nodes, c.nodes);
    }

    #[test]
    fn square_mesh_has_quarter_turn_symmetry() {
        let d = build_domain(&BoundarySpec::<f64>::centered_square(1.0)).unwrap();
        let mesh = build_mesh(&d, 0.1, 0).unwrap();
        // every node rotated by 90 degrees is again a node
        let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let set: std::collections::HashSet<_> = mesh.nodes.iter().map(|p| key(*p)).collect();
        for p in &mesh.nodes {
            assert!(set.contains(&key([-p[1], p[0]])));
        }
    }

    #[test]
    fn scaling_is_a_semigroup() {
        let pts: Vec<[f64; 2]> = vec![[1.0, 0.0], [0.3, -0.7]];
        assert_eq!(scale_points(&pts, 1.0), pts);
        assert_eq!(scale_points(&[[1.0, 0.0]], 0.5), vec![[0.5, 0.0]]);
        let twice = scale_points(&scale_points(&pts, 0.9), 0.9);
        let once = scale_points(&pts, 0.81);
        for (a, b) in twice.iter().zip(&once) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
    }
}
