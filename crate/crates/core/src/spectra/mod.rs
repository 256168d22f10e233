//! Generalized symmetric eigenproblems of the assembled pencil, eigenvalue
//! clusters, the reduced resolvent and the spectral projections attached to
//! a cluster.

mod cluster;
mod projection;
mod resolvent;
mod solver;

pub use cluster::{default_cluster_tol, form_cluster, ClusterSummary, EigenCluster};
pub use projection::{
    projection_distance, resolvent_expansion_defect, riesz_projection, similarity_eigenvalues,
    transformation_operator, RieszProjection, TransformationOperator,
};
pub use resolvent::{reduced_resolvent_apply, DenseResolvent, ReducedResolvent, ResolventAction};
pub use solver::{count_below, lowest, solve_pencil, solve_spectrum, SolverOptions, Spectrum};

#[cfg(test)]
mod tests;
