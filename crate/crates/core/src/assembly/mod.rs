//! Discrete stiffness, mass and boundary matrices of the rescaled
//! Schrödinger operator, and discrete boundary traces.

mod boundary;
mod operator;
mod potential;

pub use boundary::{BcKind, BoundaryCondition, BoundaryField, BoundaryFunction, FiniteRankPair, Robin};
pub use operator::{
    assemble, boundary_form, boundary_mass, boundary_quadrature_points, mass_matrix, quadrature_points,
    stiffness_matrix, theta_d_matrix, traces, weighted_boundary_mass, weighted_mass, AssembledOperator, FlowProblem,
    TraceData,
};
pub use potential::{
    polynomial, potential_t_derivatives, DerivativeSource, GradientField, HessianField, MatrixField,
    MatrixPotential, Monomial, PotentialSamples, FD_STEP,
};
