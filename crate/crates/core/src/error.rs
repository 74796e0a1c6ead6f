use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cavitation: Bernoulli argument {0:e} is not positive")]
    Cavitation(f64),
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("root not found: {0}")]
    RootNotFound(String),
    #[error("ambiguous root: {0}")]
    AmbiguousRoot(String),
    #[error("sonic degeneracy: D = {d:e} at sigma = {sigma}")]
    Degeneracy { sigma: f64, d: f64 },
    #[error("slip event not reached before sigma = 1/b = {0}")]
    NoCone(f64),
    #[error("angle {theta} outside [{lo}, {hi}]")]
    OutOfRange { theta: f64, lo: f64, hi: f64 },
    #[error("spectral proximity: mode mu = {mu} has condition estimate {cond:e}")]
    SpectralProximity { mu: f64, cond: f64 },
    #[error("truncation: data at the window ends is {ratio:e} of its peak (limit {limit:e})")]
    Truncation { ratio: f64, limit: f64 },
    #[error("non-contraction: observed rate {rate} after {iterations} iterations")]
    NonContraction { rate: f64, iterations: usize },
    #[error("perturbation size {size:e} exceeds the contraction threshold {threshold:e}")]
    PerturbationTooLarge { size: f64, threshold: f64 },
    #[error("inner iteration failed: {0}")]
    InnerDivergence(String),
    #[error("outer iteration failed: {0}")]
    OuterDivergence(String),
    #[error("shock degeneracy: denominator {0:e}")]
    ShockDegeneracy(f64),
    #[error("fold: Jacobian denominator {0:e}")]
    Fold(f64),
    #[error("degenerate boundary condition: alpha = {0:e}")]
    DegenerateBoundary(f64),
    #[error("admissibility: {0}")]
    Admissibility(String),
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Short machine-readable tag used in failure reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Cavitation(_) => "cavitation",
            Error::Domain(_) => "domain",
            Error::RootNotFound(_) => "root_not_found",
            Error::AmbiguousRoot(_) => "ambiguous_root",
            Error::Degeneracy { .. } => "degeneracy",
            Error::NoCone(_) => "no_cone",
            Error::OutOfRange { .. } => "out_of_range",
            Error::SpectralProximity { .. } => "spectral_proximity",
            Error::Truncation { .. } => "truncation",
            Error::NonContraction { .. } => "non_contraction",
            Error::PerturbationTooLarge { .. } => "perturbation_too_large",
            Error::InnerDivergence(_) => "inner_divergence",
            Error::OuterDivergence(_) => "outer_divergence",
            Error::ShockDegeneracy(_) => "shock_degeneracy",
            Error::Fold(_) => "fold",
            Error::DegenerateBoundary(_) => "degenerate_boundary",
            Error::Admissibility(_) => "admissibility",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
