use thiserror::Error;

/// Every failure the laboratory can report.
///
/// Variants are grouped by how the command-line front end maps them to exit
/// codes: validation problems (bad keys, out-of-range arguments) versus
/// numerical failures (no separatrix, inapplicable hypotheses).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Keller-Osserman integral diverges: {0}")]
    KoViolation(String),

    #[error("trajectory invalid: {0}")]
    TrajectoryInvalid(String),

    #[error("no separatrix in bracket: lower probe {lower}, upper probe {upper}")]
    NoSeparatrix { lower: String, upper: String },

    #[error("no solution in bracket: {0}")]
    NoSolutionInBracket(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("cannot invert profile: {0}")]
    CannotInvert(String),

    #[error("wrong potential family: {0}")]
    WrongFamily(String),

    #[error("ordering violated: {0}")]
    OrderingViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::OutOfRange(_) | Error::Parse(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
