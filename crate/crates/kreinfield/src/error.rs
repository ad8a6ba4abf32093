use thiserror::Error;

/// Crate-wide error type. Variant names follow the failure modes of the
/// individual subsystems; most signal that an input left the regime in
/// which the finite-dimensional constructions are reliable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid rejected: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("operator dimensions do not match: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("operators live on different spaces: {0:?} vs {1:?}")]
    SpaceMismatch(crate::dense::Space, crate::dense::Space),

    #[error("discretized operator is not positive definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("eigenvalue cluster is not isolated: gap {gap:.3e} <= gap_min {gap_min:.3e}")]
    ClusterNotIsolated { gap: f64, gap_min: f64 },

    #[error("eigenvalue {0:?} falls inside the real/complex dead band; tolerance tuning needed")]
    AmbiguousRealness(num_complex::Complex64),

    #[error("complex eigenvalue {0:?} has no conjugate partner of equal multiplicity")]
    UnpairedComplexEigenvalue(num_complex::Complex64),

    #[error("definitizing polynomial construction failed the a-posteriori positivity check (min eig {0:.3e})")]
    ConstructionFailed(f64),

    #[error("resolvent blowup at quadrature node {node:?}: |R| = {norm:.3e}")]
    ResolventBlowup {
        node: num_complex::Complex64,
        norm: f64,
    },

    #[error("interval boundary {boundary} lies within gap_min {gap_min:.3e} of eigenvalue {eigenvalue}")]
    NotAdmissible {
        boundary: f64,
        eigenvalue: f64,
        gap_min: f64,
    },

    #[error("time evolution overflow: |T_t| would exceed 1e300 at t = {0}")]
    Overflow(f64),

    #[error("RK4 step too large: dt * rho(b) = {0:.3e} > 2.5")]
    StepTooLarge(f64),

    #[error("time window too short: expected gap {gap:.3e} < 4 x frequency resolution {resolution:.3e}")]
    WindowTooShort { gap: f64, resolution: f64 },

    #[error("covariance is not dominating; the data does not define a quasi-free state")]
    NotAState,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("inconsistent criticality classification: {0}")]
    InconsistentClassification(String),

    #[error("scenario configuration error: {0}")]
    Config(String),

    #[error("linear algebra backend error: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
