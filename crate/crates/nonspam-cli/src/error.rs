use std::fmt;

/// Command-line failure modes, mapped onto the exit-code contract:
/// 1 usage/validation, 2 I/O or format, 3 numerical.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io { path: String, source: std::io::Error },
    Numerical(String),
    Lib(nonspam::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Lib(e) => match e {
                nonspam::Error::Domain(_)
                | nonspam::Error::Dimension(_)
                | nonspam::Error::Range(_)
                | nonspam::Error::ScaleGuard { .. } => 1,
                nonspam::Error::Io { .. }
                | nonspam::Error::Format(_)
                | nonspam::Error::Parse { .. } => 2,
                nonspam::Error::Precision(_)
                | nonspam::Error::NotConverged { .. }
                | nonspam::Error::FrameDegenerate { .. }
                | nonspam::Error::IllConditioned { .. }
                | nonspam::Error::FrameViolation { .. } => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<nonspam::Error> for CliError {
    fn from(e: nonspam::Error) -> Self {
        CliError::Lib(e)
    }
}
