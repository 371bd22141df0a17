use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("non-finite intermediate at layer {layer}")]
    Overflow { layer: usize },

    #[error("network must have at least 2 layers, got {0}")]
    TooShallow(usize),

    #[error("matrix entries length {len} does not equal rows * cols = {rows} * {cols}")]
    BadShape { rows: usize, cols: usize, len: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("target out of range: ||z||inf = {norm} > R = {bound}")]
    TargetOutOfRange { norm: f64, bound: f64 },

    #[error("output bound violated: ||F(x)||inf = {norm} > R = {bound}")]
    OutputBoundViolated { norm: f64, bound: f64 },

    #[error("inconsistent trigger metadata: {0}")]
    BadMetadata(String),

    #[error("invalid sampler: {0}")]
    BadSampler(String),

    #[error("invalid layer dimensions: {0}")]
    InvalidDims(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    pub(crate) fn dims(context: impl Into<String>, expected: usize, actual: usize) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
            expected,
            actual,
        }
    }
}
