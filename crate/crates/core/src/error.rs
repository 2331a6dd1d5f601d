use thiserror::Error;

/// Failures raised while building or propagating a walker.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("lattice needs at least 3 sites, got {0}")]
    TooFewSites(usize),

    #[error("amplitude arrays differ in length ({up} up, {down} down)")]
    LengthMismatch { up: usize, down: usize },

    #[error("origin {origin} lies outside a lattice of {n_sites} sites")]
    OriginOutOfRange { origin: usize, n_sites: usize },

    #[error("initial spinor has squared norm {0}, expected 1")]
    SpinorNorm(f64),

    #[error("coin angle theta = {0} outside [0, pi]")]
    CoinAngle(f64),

    #[error("invalid field parameter {name} = {value}: {reason}")]
    Field {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error(
        "wavefunction reached the lattice edge before step {step} \
         (probability {probability:.3e} within 2 sites of the boundary)"
    )]
    EdgeLeak { step: usize, probability: f64 },

    #[error("dense oracle supports at most {max} sites, got {n_sites}")]
    OracleTooLarge { n_sites: usize, max: usize },

    #[error("dense step operator at t = {t} deviates from unitarity by {deviation:.3e}")]
    NotUnitary { t: usize, deviation: f64 },
}

/// Failures raised by trace and spectrum analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("window {start}..={end} exceeds trace of {len} samples")]
    WindowOutOfRange {
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("window {start}..={end} holds fewer than 2 samples")]
    WindowTooShort { start: usize, end: usize },

    #[error("no spectral bin at or above {min_freq} rad/step")]
    EmptyRange { min_freq: f64 },

    #[error("trace needs at least 2 samples, got {0}")]
    TraceTooShort(usize),

    #[error("invalid analysis parameter: {0}")]
    Invalid(String),
}

/// Top-level error for experiment drivers and the command line.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Walk(#[from] WalkError),

    #[error(transparent)]
    Analysis(#[from] AnalysisError),

    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
