use std::fmt;

/// Errors produced by the filter-bank library.
#[derive(Debug)]
pub enum Error {
    /// An input value is outside its mathematical domain (non-finite,
    /// non-positive time constant, percentage out of range, ...).
    Domain(String),
    /// Array or grid shapes do not agree.
    Dimension(String),
    /// The requested discretization is too coarse for the quadrature to be
    /// trustworthy.
    Precision(String),
    /// A requested time lies outside the sampled horizon.
    Range(String),
    /// The temporal weights did not reach their asymptote within the grid
    /// horizon; carries the residual that was achieved.
    NotConverged { residual: f64, horizon: f64 },
    /// The kernel family numerically fails the frame condition (the lower
    /// bound is not strictly positive).
    FrameDegenerate { alpha: f64 },
    /// The aggregate spectrum spans too many orders of magnitude for a stable
    /// dual synthesis.
    IllConditioned { min_spectrum: f64, max_spectrum: f64 },
    /// A randomized energy-ratio trial escaped the frame bounds.
    FrameViolation { trial: usize, rho: f64, alpha: f64, beta: f64 },
    /// The dense-matrix oracle would be too large to build.
    ScaleGuard { rows: usize, limit: usize },
    /// Malformed coefficient file or other structured input.
    Format(String),
    /// Malformed text/image input, with the byte offset of the failure.
    Parse { path: String, offset: usize, msg: String },
    /// Underlying I/O failure, with path context.
    Io { path: String, source: std::io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::Precision(msg) => write!(f, "precision error: {msg}"),
            Error::Range(msg) => write!(f, "range error: {msg}"),
            Error::NotConverged { residual, horizon } => write!(
                f,
                "temporal weights not converged within horizon {horizon} s \
                 (achieved relative residual {residual:e})"
            ),
            Error::FrameDegenerate { alpha } => write!(
                f,
                "frame degeneracy: lower frame bound {alpha:e} is not strictly positive"
            ),
            Error::IllConditioned { min_spectrum, max_spectrum } => write!(
                f,
                "ill-conditioned frame: min aggregate spectrum {min_spectrum:e} \
                 below 1e-12 of max {max_spectrum:e}"
            ),
            Error::FrameViolation { trial, rho, alpha, beta } => write!(
                f,
                "frame violation at trial {trial}: energy ratio {rho} outside [{alpha}, {beta}]"
            ),
            Error::ScaleGuard { rows, limit } => write!(
                f,
                "dense frame matrix refused: {rows} rows exceeds oracle scale guard {limit}"
            ),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Parse { path, offset, msg } => {
                write!(f, "parse error in {path} at byte {offset}: {msg}")
            }
            Error::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
