use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown network configuration `{0}` (expected no_int, visible or hidden)")]
    UnknownConfiguration(String),

    #[error("unknown mobility scenario `{0}` (expected static, slow, medium, fast or all)")]
    UnknownMobility(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("{path}:{line}: {msg}")]
    ConfigSyntax { path: String, line: usize, msg: String },

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid value `{value}` for `{key}`")]
    InvalidValue { key: String, value: String },

    #[error("contention window {cw} outside [{min}, {max}]")]
    ContentionWindow { cw: u32, min: u32, max: u32 },

    #[error("malformed report: {0}")]
    MalformedReport(String),

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
