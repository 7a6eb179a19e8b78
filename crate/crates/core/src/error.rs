use thiserror::Error;

/// Errors raised by the tree, measure and decomposition machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("letter index {letter} out of range for rank {rank}")]
    LetterOutOfRange { letter: u8, rank: usize },
    #[error("Gromov product of a boundary point with itself is infinite")]
    InfiniteProduct,
    #[error("shadow of a point seen from itself is degenerate")]
    DegenerateShadow,
    #[error("free group of rank {0} is not supported (need rank >= 2)")]
    UnsupportedRank(usize),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("kernel evaluated on the diagonal")]
    Diagonal,
    #[error("function must be strictly positive, found {value} at {location}")]
    NonPositive { value: f64, location: String },
    #[error("decay certification failed at x={x}, r={r}, s={s}: {reason}")]
    DecayCertification { x: String, r: f64, s: f64, reason: String },
    #[error("not a spike: condition ({condition}) fails at {witness}")]
    NotASpike { condition: u8, witness: String },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("decomposition aborted at stage {stage}: {reason}")]
    Aborted { stage: usize, reason: String },
    #[error("empty decomposition")]
    EmptyDecomposition,
    #[error("degenerate walk: {0}")]
    DegenerateWalk(String),
    #[error("simulation failed: {unstable} of {paths} paths never stabilized")]
    Unstabilized { unstable: usize, paths: usize },
    #[error("invalid hyperboloid point: Minkowski norm {0}")]
    InvalidPoint(f64),
    #[error("quadrature did not converge (error estimate {0:e})")]
    Quadrature(f64),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
