use std::fmt;

/// Crate-wide error type. Every variant maps to a stable machine-greppable
/// code via [`Error::code`], which the CLI prints as a single-line prefix.
#[derive(Debug)]
pub enum Error {
    /// Incompatible tensor shapes, names the operation and both shapes.
    ShapeMismatch { op: &'static str, detail: String },
    /// A precondition on an argument failed (bad group count, T <= 0, ...).
    InvalidArgument(String),
    /// File format violation while parsing a dataset or checkpoint.
    Parse(String),
    /// Configuration file problem, with key/line diagnostics.
    Config(String),
    /// Training loss became non-finite.
    Divergence { epoch: usize, batch: usize },
    /// `channel_match` could not reach the requested tolerance.
    NoChannelMatch {
        best_multiplier: f64,
        best_deviation: f64,
        tolerance: f64,
    },
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::ShapeMismatch { .. } => "E_SHAPE",
            Error::InvalidArgument(_) => "E_ARG",
            Error::Parse(_) => "E_PARSE",
            Error::Config(_) => "E_CONFIG",
            Error::Divergence { .. } => "E_DIVERGE",
            Error::NoChannelMatch { .. } => "E_MATCH",
            Error::Io(_) => "E_IO",
        }
    }

    pub fn shape(op: &'static str, detail: impl Into<String>) -> Error {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, detail } => write!(f, "shape mismatch in {op}: {detail}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Divergence { epoch, batch } => {
                write!(f, "training diverged (non-finite loss) at epoch {epoch}, batch {batch}")
            }
            Error::NoChannelMatch {
                best_multiplier,
                best_deviation,
                tolerance,
            } => write!(
                f,
                "no width multiplier reached tolerance {tolerance}: best {best_multiplier} deviates {best_deviation:.4}"
            ),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
