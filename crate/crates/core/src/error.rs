use thiserror::Error;

use crate::geom::GeomError;
use crate::scenecfg::ConfigError;
use crate::victim::VictimError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Victim(#[from] VictimError),
    #[error("format error: {0}")]
    Format(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("scene error: {0}")]
    Scene(String),
    #[error("non-finite loss {0}")]
    NonFinite(f64),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("iteration {iter}, view {view}: {source}")]
    Pipeline {
        iter: usize,
        view: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
