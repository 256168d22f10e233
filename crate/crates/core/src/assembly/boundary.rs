use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::scalar::{Point, Real};

pub type BoundaryField<T> = Arc<dyn Fn(Point<T>) -> DMatrix<T> + Send + Sync>;
pub type BoundaryFunction<T> = Arc<dyn Fn(Point<T>) -> DVector<T> + Send + Sync>;

/// One term `⟨·, f⟩ g` of the finite-rank part of `Θ`.
#[derive(Clone)]
pub struct FiniteRankPair<T> {
    pub f: BoundaryFunction<T>,
    pub g: BoundaryFunction<T>,
}

/// Robin data: `Θ = θ(y)· + Σᵢ ⟨·, fᵢ⟩ gᵢ` on the boundary of the reference
/// domain.
#[derive(Clone)]
pub struct Robin<T> {
    pub theta: BoundaryField<T>,
    pub finite_rank: Vec<FiniteRankPair<T>>,
}

#[derive(Clone)]
pub enum BoundaryCondition<T> {
    Dirichlet,
    /// `(γ_N − tΘγ_D)u = 0`
    Robin(Robin<T>),
}

impl<T> fmt::Debug for BoundaryCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Dirichlet => write!(f, "Dirichlet"),
            BoundaryCondition::Robin(r) => write!(f, "Robin(rank {})", r.finite_rank.len()),
        }
    }
}

/// Boundary condition tag without the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Robin,
}

impl<T: Real> BoundaryCondition<T> {
    /// Robin condition with `θ(y) = s·I_N`.
    pub fn robin_constant(n: usize, s: T) -> Self {
        BoundaryCondition::Robin(Robin {
            theta: Arc::new(move |_| DMatrix::identity(n, n) * s),
            finite_rank: Vec::new(),
        })
    }

    pub fn robin(theta: BoundaryField<T>) -> Self {
        BoundaryCondition::Robin(Robin {
            theta,
            finite_rank: Vec::new(),
        })
    }

    /// Neumann is Robin with `θ = 0`.
    pub fn neumann(n: usize) -> Self {
        Self::robin_constant(n, T::zero())
    }

    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryCondition::Dirichlet => BcKind::Dirichlet,
            BoundaryCondition::Robin(_) => BcKind::Robin,
        }
    }
}
