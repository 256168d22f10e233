//! Sparse and dense linear algebra kernels.

pub mod assignment;
mod csr;
pub mod dense;
mod ldl;

pub use csr::CsrMatrix;
pub use ldl::{reverse_cuthill_mckee, EnvelopeLdl, Inertia};
