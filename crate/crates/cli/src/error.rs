use std::path::PathBuf;

use thiserror::Error;

use crate::config::Stage;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("bad config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("bad config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: Stage, source: freewalk_core::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Tags a core error with the stage it came from.
pub(crate) trait InStage<T> {
    fn in_stage(self, stage: Stage) -> Result<T>;
}

impl<T> InStage<T> for freewalk_core::Result<T> {
    fn in_stage(self, stage: Stage) -> Result<T> {
        self.map_err(|source| CliError::Stage { stage, source })
    }
}
