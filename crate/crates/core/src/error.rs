use thiserror::Error;

use crate::panel::Period;

/// Errors raised by panel construction and the estimators built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no records supplied")]
    EmptyPanel,

    #[error("missing cell: entity `{entity}`, period {period}, variable `{variable}`")]
    MissingCell {
        entity: String,
        period: Period,
        variable: String,
    },

    #[error("duplicate cell: entity `{entity}`, period {period}, variable `{variable}`")]
    DuplicateCell {
        entity: String,
        period: Period,
        variable: String,
    },

    #[error("periods are not consecutive quarters: {before} is followed by {after}")]
    GapInPeriods { before: Period, after: Period },

    #[error("non-finite value for entity `{entity}`, period {period}, variable `{variable}`")]
    NonFiniteValue {
        entity: String,
        period: Period,
        variable: String,
    },

    #[error("cannot parse period `{0}` (expected YYYYQ#)")]
    PeriodParse(String),

    #[error("natural log requires strictly positive values; `{variable}` has {value} for entity `{entity}`")]
    NonPositiveForLog {
        variable: String,
        entity: String,
        value: f64,
    },

    #[error("unknown variable `{0}`")]
    MissingVariable(String),

    #[error("variable `{0}` already exists")]
    DuplicateVariable(String),

    #[error("sequence too short: need more than {needed} observations, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("empty sequence")]
    EmptySequence,

    #[error("too few observations: {n_obs} rows for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("too few periods: {needed} required, {got} available")]
    TooFewPeriods { needed: usize, got: usize },

    #[error("at least {needed} entities required, panel has {got}")]
    TooFewEntities { needed: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("entity `{entity}`: {source}")]
    Entity {
        entity: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_entity(self, entity: &str) -> Self {
        Error::Entity {
            entity: entity.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
