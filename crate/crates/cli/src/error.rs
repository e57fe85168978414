use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::report::ReportBundle;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Descriptive,
    Kao,
    Pedroni,
    Causality,
    Fmols,
    Pmg,
    FeEcm,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Descriptive => "descriptive",
            Stage::Kao => "kao",
            Stage::Pedroni => "pedroni",
            Stage::Causality => "causality",
            Stage::Fmols => "fmols",
            Stage::Pmg => "pmg",
            Stage::FeEcm => "fe-ecm",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("annual series `{variable}` for entity `{entity}` has no value for {year}")]
    MissingYear {
        variable: String,
        entity: String,
        year: i32,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration: {0}")]
    Config(String),

    #[error("input data: {0}")]
    Data(#[from] xtpanel::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: xtpanel::Error,
        /// Outputs of the stages that completed before the failure.
        partial: Box<ReportBundle>,
    },
}

impl CliError {
    /// 2 for input or configuration problems, 3 for a failed computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Stage { .. } => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
