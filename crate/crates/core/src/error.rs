use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid angular profile `{0}`: {1}")]
    InvalidProfile(String, String),

    #[error("matrix is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("lambda = {lambda} lies within {distance:.3e} of the eigenvalue {eigenvalue}")]
    NearSpectrum {
        lambda: f64,
        eigenvalue: f64,
        distance: f64,
    },

    #[error("lambda = {0} lies inside a band; the integrand is singular on a set of positive measure")]
    InsideBand(f64),

    #[error("unsupported dimension d = {0}")]
    UnsupportedDimension(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
