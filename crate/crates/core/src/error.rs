use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("graph contains a directed cycle")]
    Cyclic,
    #[error("node index {index} out of range for p = {p}")]
    NodeOutOfRange { index: usize, p: usize },
    #[error("node {0} lists itself as a parent")]
    SelfLoop(usize),
    #[error("node {node} has duplicate parent {parent}")]
    DuplicateParent { node: usize, parent: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("column {0} has zero variance")]
    ZeroVarianceColumn(usize),
    #[error("design matrix is rank deficient (pivot {pivot:.3e} below floor {floor:.3e})")]
    RankDeficient { pivot: f64, floor: f64 },
    #[error("design matrix for node {node} at step {step} is rank deficient")]
    RankDeficientAt { node: usize, step: usize },
    #[error("residual is identically zero")]
    DegenerateResidual,
    #[error("the {0} family cannot be used for ordering")]
    UnsupportedFamily(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Attaches node and step context to a rank-deficiency error.
    pub fn at(self, node: usize, step: usize) -> Self {
        match self {
            Error::RankDeficient { .. } => Error::RankDeficientAt { node, step },
            other => other,
        }
    }
}
