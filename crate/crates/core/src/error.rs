use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a documented invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Evaluation point outside the domain of a closed form (band edges etc.).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e}): {context}")]
    NoConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("dimension {dim} exceeds cap {cap}; use a sector-restricted or matching-based path")]
    DimensionCap { dim: usize, cap: usize },

    #[error("region II too small: edge photon population {population:.3e} at M = {region_size}")]
    RegionTooSmall { region_size: usize, population: f64 },

    #[error("singular matching system at omega = {omega}")]
    SingularMatching { omega: f64 },

    #[error("wave packet reached the chain ends (population {population:.3e})")]
    WallCollision { population: f64 },

    #[error("sweep aborted: {failed} of {total} points failed")]
    SweepAborted { failed: usize, total: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag used in tables and diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Domain(_) => "domain",
            Error::GridTooSmall(_) => "grid_too_small",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DimensionCap { .. } => "dimension_cap",
            Error::RegionTooSmall { .. } => "region_too_small",
            Error::SingularMatching { .. } => "singular_matching",
            Error::WallCollision { .. } => "wall_collision",
            Error::SweepAborted { .. } => "sweep_aborted",
            Error::Io(_) => "io",
        }
    }

    /// True for failures of an iterative numerical method.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. } | Error::SingularMatching { .. } | Error::SweepAborted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
