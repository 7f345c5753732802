use std::path::PathBuf;

/// Crate-wide error type. Variants map to the failure categories surfaced by
/// the CLI: each carries enough context to name the offending entity.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value lies outside its mathematical domain (negative count,
    /// probability outside [0,1], abortion propensity at or above 1/1.1, ...).
    #[error("input-domain: {0}")]
    InputDomain(String),

    /// Cross-record inconsistency (group sizes not summing to totals, a
    /// region assigned to two super-regions, calendar mismatches, ...).
    #[error("structural: {0}")]
    Structural(String),

    /// A file could not be parsed; carries path and 1-based line when known.
    #[error("parse: {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    /// A record references an entity that does not exist (unknown country
    /// id, period outside the calendar, ...).
    #[error("referential: {0}")]
    Referential(String),

    /// A computation degenerated numerically (truncation interval with
    /// vanishing mass, undefined ratio where a value is required, ...).
    #[error("numeric-degenerate: {0}")]
    NumericDegenerate(String),

    /// No feasible state could be produced (constraint named).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Invariant broken inside the library itself.
    #[error("internal: {0}")]
    Internal(String),
}

impl Error {
    /// Short machine-readable category tag, used in CLI error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InputDomain(_) => "input-domain",
            Error::Structural(_) => "structural",
            Error::Parse { .. } => "parse",
            Error::Referential(_) => "referential",
            Error::NumericDegenerate(_) => "numeric-degenerate",
            Error::Infeasible(_) => "infeasible",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Internal(_) => "internal",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
