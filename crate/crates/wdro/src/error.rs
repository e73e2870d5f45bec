use thiserror::Error;

/// Crate-wide error type. Every variant maps onto one machine-readable
/// category so callers (the CLI in particular) can translate failures into
/// stable exit codes without string matching.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed run configuration: zero-resolution searches, missing files,
    /// unusable parameter combinations.
    #[error("config error: {0}")]
    Config(String),

    /// Input outside an operation's mathematical domain: exponents below 1,
    /// weights off the simplex, dimension mismatches, family mismatches.
    #[error("domain error: {0}")]
    Domain(String),

    /// The worst-case value is infinite: the transport exponent is too small
    /// for the loss's growth, or no multiplier yields a finite objective.
    #[error("unbounded: {0}")]
    Unbounded(String),

    /// A gradient was requested at a declared nondifferentiable point.
    #[error("kink: {0}")]
    Kink(String),

    /// A root-finding bracket could not be established.
    #[error("no root: {0}")]
    NoRoot(String),
}

impl Error {
    /// Stable category tag, used verbatim in CLI error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Domain(_) => "domain",
            Error::Unbounded(_) => "unbounded",
            Error::Kink(_) => "kink",
            Error::NoRoot(_) => "no-root",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
