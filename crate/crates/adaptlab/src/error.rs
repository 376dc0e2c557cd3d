use thiserror::Error;

/// Unified error type for the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A state, derivative, or control value left the finite range.
    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: &'static str, detail: String },

    /// A configuration failed validation before any run started.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A controller could not produce a control value.
    #[error("controller fault: {0}")]
    ControllerFault(String),

    /// A simulation aborted mid-run. The partial trajectory is preserved.
    #[error("simulation fault at t={t}: {diagnostic}")]
    SimulationFault {
        t: f64,
        diagnostic: String,
        partial: Box<crate::dynamics::Trajectory>,
    },

    /// A designer reply could not be turned into a proposal.
    #[error("parse fault: {reason}")]
    ParseFault { reason: String, raw_reply: String },

    /// The chat endpoint could not be reached or replied abnormally.
    #[error("endpoint fault: {0}")]
    Endpoint(String),

    #[error("metrics fault: {0}")]
    Metrics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Stable machine-readable kind tag, used by the CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ControllerFault(_) => "controller_fault",
            Error::SimulationFault { .. } => "simulation_fault",
            Error::ParseFault { .. } => "parse_fault",
            Error::Endpoint(_) => "endpoint",
            Error::Metrics(_) => "metrics",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Toml(_) => "toml",
        }
    }
}
