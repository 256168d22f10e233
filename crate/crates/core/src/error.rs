use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain is not star-shaped about the origin: {0}")]
    NotStarShaped(String),
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error("potential derivative unavailable: {0}")]
    MissingDerivative(String),
    #[error("zero-area element {0}")]
    SingularElement(usize),
    #[error("boundary operator is not selfadjoint: {0}")]
    NotSelfadjoint(String),
    #[error("operation requires {expected} boundary condition")]
    WrongBc { expected: &'static str },
    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("no eigenvalue within {tol:e} of {target}")]
    NoEigenvalueNear { target: f64, tol: f64 },
    #[error("ambiguous cluster at {target}: gap {gap:e} < 3 x tolerance {tol:e}")]
    AmbiguousCluster { target: f64, gap: f64, tol: f64 },
    #[error("deflated system is singular: {0}")]
    SingularSystem(String),
    #[error("{found} eigenvalues inside the isolating interval, expected {expected}")]
    ClusterSplitLeak { expected: usize, found: usize },
    #[error("projections too far apart: |P(t) - P| = {0}")]
    ProjectionsTooFar(f64),
    #[error("first-order groups too close: gap {gap:e} < 3 x tolerance {tol:e}")]
    GroupingUnstable { gap: f64, tol: f64 },
    #[error("not a crossing: kernel residual {0:e}")]
    NotACrossing(f64),
    #[error("strong Neumann trace unavailable: {0}")]
    StrongTraceUnavailable(String),
    #[error("grid too coarse near t = {0}; increase grid_n")]
    GridTooCoarse(f64),
    #[error("degenerate crossing at t = {t0}: smallest form eigenvalue {smallest:e}")]
    DegenerateCrossing { t0: f64, smallest: f64 },
    #[error("branch pairing ambiguous: cost ratio {0}")]
    BranchPairingAmbiguous(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
