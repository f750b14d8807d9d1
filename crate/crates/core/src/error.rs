use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("site count {0} outside 1..=32")]
    SiteCount(usize),
    #[error("particle number {particles} exceeds site count {sites}")]
    ParticleNumber { particles: usize, sites: usize },
    #[error("site label {site} outside 1..={sites}")]
    SiteLabel { site: usize, sites: usize },
    #[error("{0} is not available inside a number-restricted basis")]
    RestrictedBasis(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),
    #[error("fugacity {0} outside [0, 1]")]
    Fugacity(f64),
    #[error("dimension {dim} exceeds the dense budget {cap}")]
    Budget { dim: usize, cap: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("need at least 3 eigenvalues, got {0}")]
    TooFewEigenvalues(usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("site count {0} is odd; the charge-density-wave state needs an even chain")]
    OddLength(usize),
    #[error("trace collapsed to {trace:e} at t = {time}")]
    TraceCollapse { trace: f64, time: f64 },
    #[error("non-finite state at step {step} (t = {time})")]
    NonFiniteState { step: usize, time: f64 },
    #[error("hierarchy truncation weight {weight:e} above bound {bound:e}")]
    Truncation { weight: f64, bound: f64 },
    #[error("partition function {0:e} below the underflow guard")]
    PartitionUnderflow(f64),
    #[error("activity rate is undefined at zeta = 0")]
    ZeroFugacity,
    #[error("imbalance undefined: <N> = {0:e}")]
    EmptyState(f64),
    #[error("sampling grid too coarse: spacing {0} > 1e-2")]
    CoarseGrid(f64),
    #[error("dominant eigenvalue {0} is not real")]
    ComplexDominant(Complex64),
    #[error("dense eigensolver did not converge")]
    Eigensolver,
    #[error("singular value decomposition did not converge")]
    Svd,
    #[error("zero-norm tensor at site {0}")]
    ZeroNorm(usize),
    #[error("bond dimension cap must be at least 1")]
    BondCap,
    #[error("term couples sites {0} and {1}, which are not nearest neighbours")]
    NotNearestNeighbour(usize, usize),
    #[error("imaginary residue {residue:e} exceeds {bound:e} at t = {time}")]
    ImaginaryResidue { residue: f64, bound: f64, time: f64 },
    #[error("empty operator string")]
    EmptyOperatorString,
    #[error("invalid time grid: {0}")]
    TimeGrid(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("sample h = {disorder}, zeta = {zeta}, seed = {seed}: {source}")]
    InSample {
        disorder: f64,
        zeta: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the request rather than by the numerics.
    pub fn is_configuration(&self) -> bool {
        match self {
            Error::InSample { source, .. } => source.is_configuration(),
            Error::SiteCount(_)
            | Error::ParticleNumber { .. }
            | Error::SiteLabel { .. }
            | Error::InvalidParameter(_)
            | Error::Fugacity(_)
            | Error::Budget { .. }
            | Error::OddLength(_)
            | Error::TimeGrid(_)
            | Error::Config(_)
            | Error::BondCap
            | Error::ZeroFugacity
            | Error::Io(_) => true,
            _ => false,
        }
    }

    /// Attaches the grid point and seed of the sample that failed.
    pub fn in_sample(self, disorder: f64, zeta: f64, seed: u64) -> Error {
        Error::InSample {
            disorder,
            zeta,
            seed,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
