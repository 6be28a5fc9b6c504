use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("mismatched primes: {0} vs {1}")]
    PrimeMismatch(u32, u32),

    #[error("mismatched variable counts: {0} vs {1}")]
    ArityMismatch(usize, usize),

    #[error("axis {axis} out of range for {nvars} variables")]
    AxisOutOfRange { axis: usize, nvars: usize },

    #[error("zero input: {0}")]
    ZeroInput(&'static str),

    #[error("empty point set")]
    EmptyInput,

    #[error("duplicate abscissa {0} in Newton polygon input")]
    DuplicateAbscissa(i64),

    #[error("twisted polynomial is not monic")]
    NonMonic,

    #[error("split index {0} lies inside a segment; no factorization boundary there")]
    SplitInsideSegment(i64),

    #[error("p-divisible monomial: Artin-Schreier reduction required, out of scope (exponent {0})")]
    PDivisibleSupport(String),

    #[error("coefficient {0} is not p-integral")]
    NotIntegral(String),

    #[error("module is not solvable at the boundary: log-scale {0} does not vanish as c -> 0")]
    NotSolvable(String),

    #[error("scale reading is unreliable: {0}")]
    Unreadable(String),

    #[error("cyclic vector search exhausted after {0} candidates")]
    CyclicVectorExhausted(usize),

    #[error("rank {rank} exceeds the configured cyclic-vector bound {bound}")]
    RankTooLarge { rank: usize, bound: usize },

    #[error("integrability fails for axes {0} and {1}")]
    NotIntegrable(usize, usize),

    #[error("point {0} lies outside the region")]
    OutsideRegion(String),

    #[error("samples are not convex: {0}")]
    NonConvex(String),

    #[error("no polyhedral description at this resolution: {0}")]
    Unresolved(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("special locus not enumerable: {0}")]
    Unenumerable(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("at {0}: {1}")]
    AtPoint(String, Box<Error>),
}

impl Error {
    /// Inputs the tool declines to evaluate, as opposed to internal failures.
    pub fn is_unsupported_input(&self) -> bool {
        if let Error::AtPoint(_, inner) = self {
            return inner.is_unsupported_input();
        }
        matches!(
            self,
            Error::PDivisibleSupport(_)
                | Error::NotIntegral(_)
                | Error::NotSolvable(_)
                | Error::Unreadable(_)
                | Error::CyclicVectorExhausted(_)
                | Error::RankTooLarge { .. }
                | Error::Unsupported(_)
                | Error::Unenumerable(_)
        )
    }
}
