//! Shared error type. Input problems and numeric/convergence failures are
//! kept apart so callers can map them to distinct exit codes.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed instance file; carries the 1-based line number.
    Parse { line: usize, message: String },
    /// Structurally invalid input: bad dimensions, unbalanced demands,
    /// disconnected graph, parameter out of range.
    Input(String),
    /// Numeric or convergence failure: safety cap exceeded, degenerate
    /// potential, sampling budget exhausted.
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Error::Numeric(message.into())
    }

    /// True for errors caused by the input rather than by the computation.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Input(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Input(message) => write!(f, "invalid input: {message}"),
            Error::Numeric(message) => write!(f, "numeric failure: {message}"),
        }
    }
}

impl std::error::Error for Error {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_report_line_numbers() {
        let err = Error::Parse {
            line: 7,
            message: "bad edge".into(),
        };
        assert_eq!(err.to_string(), "parse error at line 7: bad edge");
        assert!(err.is_input());
    }

    #[test]
    fn numeric_errors_are_not_input_errors() {
        assert!(!Error::numeric("cap exceeded").is_input());
        assert!(Error::input("demands do not balance").is_input());
    }
}
