use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid counting path: {0}")]
    InvalidCountingPath(String),

    #[error("invalid covariate path: {0}")]
    InvalidCovariatePath(String),

    #[error("horizon mismatch: counting path has T={counting}, covariate path has T={covariate}")]
    HorizonMismatch { counting: f64, covariate: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("intensity {value} at t={t} exceeds the thinning majorant {bound}")]
    MajorantViolated { t: f64, value: f64, bound: f64 },

    #[error("intensity evaluated to {value} at t={t}; a strictly positive value is required")]
    NonPositiveIntensity { t: f64, value: f64 },

    #[error("intensity bound violated: {0}")]
    IntensityBounds(String),

    #[error("dictionary bound violated: {0}")]
    DictionaryBound(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite objective encountered at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("{stage} failed for n={n}, replication {replication}: {source}")]
    Stage {
        stage: &'static str,
        n: usize,
        replication: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors that signal a violated model or numerical invariant rather than
    /// bad input or I/O trouble.
    pub fn is_invariant_failure(&self) -> bool {
        if let Error::Stage { source, .. } = self {
            return source.is_invariant_failure();
        }
        matches!(
            self,
            Error::MajorantViolated { .. }
                | Error::NonPositiveIntensity { .. }
                | Error::IntensityBounds(_)
                | Error::DictionaryBound(_)
                | Error::NonFinite { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
