use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("sample at t={t} h does not follow the last stored sample at t={last} h")]
    NonMonotoneTime { t: f64, last: f64 },

    #[error("sample spacing {got} h differs from the window spacing {expected} h")]
    NonUniformSpacing { got: f64, expected: f64 },

    #[error("estimator window holds {have} of {need} samples")]
    WindowNotReady { have: usize, need: usize },

    #[error("state ({0:?}) left the plausible range [-20, 60] °C")]
    StateOutOfRange([f64; 3]),

    #[error("building {building} diverged at t={t} h: {detail}")]
    Divergence {
        building: usize,
        t: f64,
        detail: String,
    },

    #[error("profile query at t={t} h is outside the covered span [{start}, {end}] h")]
    OutOfSpan { t: f64, start: f64, end: f64 },

    #[error("{path}: line {line}: {detail}")]
    Parse {
        path: PathBuf,
        line: usize,
        detail: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
