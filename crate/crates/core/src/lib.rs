//! Eigenvalue flows of matrix Schrödinger operators `−Δ + V` on the family
//! of shrinking star-shaped domains `Ω_t = {tx : x ∈ Ω}`.
//!
//! Every `Ω_t` is pulled back to the fixed reference domain, where the
//! operator becomes the pencil `A(t) = K + M[V^t] − tB_θ` against the mass
//! matrix `M`, with `V^t(x) = t²V(tx)`. The eigenvalues `Λ(t)` of that pencil
//! are `t²λ(t)`. On this pencil the crate computes:
//!
//! - first derivatives of the branches from `T⁽¹⁾` on an eigenvalue cluster,
//!   and two-term asymptotics from `T⁽²⁾`;
//! - conjugate times for a fixed `λ0`, the Maslov crossing form at each of
//!   them (interior and boundary-integral routes) and the Maslov index;
//! - spectral projections and transformation operators of a cluster;
//! - independent oracles (finite differences, analytic disc and square data).
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix `f64`.
//!
//! ```no_run
//! use std::sync::Arc;
//! use spectral_flow::{build_domain, build_mesh, BoundaryCondition, BoundarySpec, FlowProblem, MatrixPotential};
//!
//! let domain = build_domain(&BoundarySpec::disc(1.0, 256)).unwrap();
//! let mesh = Arc::new(build_mesh(&domain, 0.05, 0).unwrap());
//! let problem: FlowProblem = FlowProblem::new(mesh, MatrixPotential::zero(1), BoundaryCondition::Dirichlet).unwrap();
//! let result = spectral_flow::maslov::maslov_index(&problem, 20.0, (0.5, 1.0), 24).unwrap();
//! assert!(result.index <= 0);
//! ```

pub mod acceptance;
pub mod assembly;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod maslov;
pub mod oracle;
pub mod perturbation;
pub mod scalar;
pub mod spectra;

pub use error::{Error, Result};
pub use geometry::{build_domain, build_mesh};
pub use scalar::Real;

pub type BoundarySpec = geometry::BoundarySpec<f64>;
pub type StarDomain = geometry::StarDomain<f64>;
pub type TriMesh = geometry::TriMesh<f64>;
pub type MatrixPotential = assembly::MatrixPotential<f64>;
pub type BoundaryCondition = assembly::BoundaryCondition<f64>;
pub type FlowProblem = assembly::FlowProblem<f64>;
pub type AssembledOperator = assembly::AssembledOperator<f64>;
pub type Spectrum = spectra::Spectrum<f64>;
pub type EigenCluster = spectra::EigenCluster<f64>;
pub type CsrMatrix = linalg::CsrMatrix<f64>;
