use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },

    #[error("duplicate scenario {scenario} for respondent `{respondent}` (row {row})")]
    DuplicateScenario {
        respondent: String,
        scenario: u8,
        row: usize,
    },

    #[error("observation references unknown respondent `{0}`")]
    OrphanObservation(String),

    #[error("unknown lexicographic rule `{0}`")]
    UnknownLexRule(String),

    #[error("parameter vector does not match spec `{spec}`: {message}")]
    ParamSpecMismatch { spec: String, message: String },

    #[error("time transform domain violation: {0}")]
    TransformDomain(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("cost coefficient is zero; marginal value of time is undefined")]
    ZeroCostCoefficient,

    #[error("invalid interval: t_from {from} must be < t_to {to} and non-negative")]
    InvalidInterval { from: f64, to: f64 },

    #[error("Halton base {0} is not prime")]
    CompositeBase(u64),

    #[error("draw count must be >= 1")]
    NoDraws,

    #[error("objective is not finite at the starting point")]
    NonFiniteStart,

    #[error("design information matrix is singular: {0}")]
    SingularInformation(String),

    #[error("empty design")]
    EmptyDesign,

    #[error("polynomial fit needs more than degree+1 grid points (have {n}, degree {degree})")]
    TooFewPoints { n: usize, degree: usize },

    #[error("{0}")]
    Invalid(String),
}
