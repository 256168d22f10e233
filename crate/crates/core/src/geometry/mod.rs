//! Star-shaped domains, their triangulations and the scaling maps `x ↦ tx`.

mod domain;
mod mesh;

pub use domain::{build_domain, BoundarySpec, RadialProfile, StarDomain, MIN_PROFILE_SAMPLES};
pub use mesh::{build_mesh, scale_points, BoundaryEdge, TriMesh};
