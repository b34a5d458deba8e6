//! Experiment harness for `pwband`: simulated norm-bound comparisons, voting
//! bands, diameter tables and coverage audits.

pub mod config;
pub mod experiments;
pub mod output;
pub mod seeds;
pub mod stats;

pub use config::{BoundChoice, ExperimentConfig, ExperimentKind};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] pwband::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(String),
}

impl HarnessError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Core(pwband::Error::Input(_)) => "input",
            HarnessError::Core(pwband::Error::Conditioning { .. }) => "conditioning",
            HarnessError::Core(pwband::Error::Numeric(_)) => "numeric",
            HarnessError::Config(_) | HarnessError::Toml(_) => "config",
            HarnessError::Io(_) => "io",
            HarnessError::Csv(_) | HarnessError::Json(_) => "output",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
