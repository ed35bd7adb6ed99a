use thiserror::Error;

/// Errors raised by estimation, simulation and experiment routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EdrError {
    /// An argument was outside the domain of the function (NaN, infinity).
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The k-NN radius collapsed to zero because too many responses coincide
    /// with the evaluation point.
    #[error("degenerate bandwidth at y = {y}{}", index.map(|i| format!(" (observation {i})")).unwrap_or_default())]
    DegenerateBandwidth { y: f64, index: Option<usize> },

    #[error("vectors are linearly dependent (residual norm {residual:e} at column {column})")]
    RankDeficient { column: usize, residual: f64 },

    /// Two estimated eigenvalues are too close for the eigenvector
    /// perturbation formula to be evaluated.
    #[error("near-degenerate spectrum: |nu_{ell} - nu_{other}| = {gap:e}")]
    NearDegenerateSpectrum { ell: usize, other: usize, gap: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Too many replicates of a Monte Carlo cell failed.
    #[error("cell model={model} n={n} kernel={kernel} method={method}: {failed} of {replicates} replicates failed ({first})")]
    CellFailed {
        model: u8,
        n: usize,
        kernel: String,
        method: String,
        failed: usize,
        replicates: usize,
        first: Box<EdrError>,
    },

    #[error("report format error: {0}")]
    Format(String),
}

pub type Result<T, E = EdrError> = std::result::Result<T, E>;
