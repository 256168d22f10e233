//! Independent references: finite differences of the discrete eigenvalue
//! branches, and analytic eigen-data of the Dirichlet Laplacian on the unit
//! disc and the centered unit square.
//!
//! Nothing here depends on the perturbation or Maslov code.

mod analytic;
mod bessel;
mod fd;

pub use analytic::{
    analytic_disc, analytic_square, disc_spectrum, rellich_ratio, DiscMode, SquareMode, SquareTable,
};
pub use bessel::{bessel_j, bessel_j_derivative, bessel_zero, bessel_zeros};
pub use fd::{
    default_steps, fd_branch_derivatives, fd_windows, richardson, FdBranch, FdReport, PAIRING_RATIO,
};
