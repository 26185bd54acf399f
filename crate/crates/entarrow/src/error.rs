use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an operation's arguments was violated.
    #[error("usage error: {0}")]
    Usage(String),
    /// A density matrix has an eigenvalue below the numerical-noise floor.
    #[error("positivity violation: eigenvalue {min_eigenvalue:e} is below the -1e-10 floor")]
    Positivity { min_eigenvalue: f64 },
    /// No projector of the decomposition holds the state with the required weight.
    #[error(
        "state is not macroscopically definite: best projector weight {best_weight} \
         is below the threshold {threshold}"
    )]
    NoMacrostate { best_weight: f64, threshold: f64 },
    /// A numerical integration left its validity envelope.
    #[error("integration error: {0}")]
    Integration(String),
    /// A curve fit could not be performed on the given signal.
    #[error("fit error: {0}")]
    Fit(String),
    /// An experiment configuration failed validation.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
