use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Rejected input: a precondition of the operation does not hold.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point lies outside the domain of branch {branch}")]
    OutsideDomain { branch: usize },
    #[error("point lies outside the range of branch {branch}")]
    OutsideRange { branch: usize },
    #[error("branch {branch} is flat and has no inverse")]
    NotInvertible { branch: usize },
    #[error("jacobian of branch {branch} vanishes at an interior point")]
    ZeroJacobian { branch: usize },
    #[error("no branch with index {branch} (curve has {count})")]
    NoSuchBranch { branch: usize, count: usize },
    #[error("kernel evaluated on the singular set (rho = {rho:e})")]
    Singular { rho: f64 },
    #[error("grid functions are defined on different grids")]
    IncompatibleGrids,
    #[error("average of |f| over the root cube is {average}, above lambda = {lambda}")]
    RootAverageAboveLambda { average: f64, lambda: f64 },
    #[error("point {index} of the output grid maps into cube {cube} through branches {first} and {second}")]
    AmbiguousLookup {
        index: usize,
        cube: usize,
        first: usize,
        second: usize,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
