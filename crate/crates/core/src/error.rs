use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller combined arguments in an unsupported way.
    #[error("usage error: {0}")]
    Usage(String),
    /// `h_n = 0`: no permutation of size `n` has positive weight.
    #[error("measure undefined: h_{n} = 0")]
    MeasureUndefined { n: usize },
    /// A numerical routine lost conditioning or accuracy.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An iterative solver failed to converge or bracket a root.
    #[error("convergence error: {0}")]
    Convergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
