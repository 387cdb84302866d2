use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u16, u16),
    #[error("{0} is not a supported prime modulus (primes up to 251)")]
    NotPrime(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid distribution: {0}")]
    InvalidPmf(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what}: {needed} exceeds enumeration cap {cap}; use sampling or raise --cap")]
    CapExceeded { what: String, needed: f64, cap: u64 },
    #[error("typical set of component {component} is empty at k={k}, eps={eps}")]
    EmptyTypicalSet { component: usize, k: usize, eps: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that signal an infeasible request rather than a bug or bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::CapExceeded { .. } | Error::EmptyTypicalSet { .. })
    }
}
