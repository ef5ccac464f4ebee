use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("system `{0}` appears twice")]
    DuplicateSystem(String),
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("not a permutation of the current systems: {0}")]
    BadPermutation(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("size overflow: {0}")]
    SizeOverflow(String),
    #[error("index out of range: {0}")]
    BadIndex(String),
    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("set is not closed under multiplication up to phase")]
    NotAGroup,
    #[error("representation is reducible (Schur sum {0:.6})")]
    NotIrreducible(f64),
    #[error("party {0} has an empty constrained state space")]
    InfeasibleParty(usize),
    #[error("reference operator is not strictly interior to the polytope")]
    DegenerateReference,
    #[error("geometry: {0}")]
    GeometryError(String),
    #[error("approximation radius must lie in (0, 1], got {0}")]
    BadRadius(f64),
    #[error("operators do not form a valid tester: {0}")]
    NotATester(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("invalid ensemble: {0}")]
    BadEnsemble(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("corrupt report: {0}")]
    BadReport(String),
}

pub type Result<T> = std::result::Result<T, Error>;
