//! Harmonic analysis of isotropic random walks on the vertex lattices of
//! affine buildings.
//!
//! The crate builds finite root system data (`root_system`), attaches
//! building parameter systems to them (`parameters`), evaluates Macdonald
//! spherical functions and their expansions (`spherical`), integrates against
//! the spherical Plancherel measure (`plancherel`), and derives walk-level
//! quantities: drift, covariance, local limit constants, and exact k-step
//! distributions (`walk`). A small CLI (`cli`) exposes the pieces.

pub mod cli;
pub mod config;
pub mod linalg;
pub mod parameters;
pub mod plancherel;
pub mod quadrature;
pub mod root_system;
pub mod spherical;
pub mod walk;

/// Crate-wide error type.
///
/// `exit_code` maps each variant onto the CLI contract: validation problems
/// exit 2, resource-cap refusals exit 3, usage errors exit 64.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid root system type {family}{rank}")]
    InvalidType { family: String, rank: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("{what} needs {needed} which exceeds the cap {cap}")]
    CapExceeded { what: String, needed: u128, cap: u128 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("operation not defined for this case: {0}")]
    WrongCase(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidType { .. }
            | Error::InvalidParameters(_)
            | Error::WrongCase(_)
            | Error::Config(_) => 2,
            Error::CapExceeded { .. } | Error::BudgetExceeded(_) | Error::Singular(_) => 3,
            Error::Usage(_) => 64,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
