use std::path::PathBuf;

/// Errors raised by the binary file readers.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error("file truncated while reading {what}")]
    Truncated { what: &'static str },
    #[error("inconsistent dimensions: {0}")]
    Dimensions(String),
    #[error("{0} trailing bytes after payload")]
    TrailingBytes(usize),
    #[error("malformed text: {0}")]
    Text(String),
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch at layer {layer}: expected {expected} columns, got {found}")]
    Shape {
        layer: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite loss) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("non-finite activation in layer {layer}, neuron {neuron}")]
    NonFiniteActivation { layer: usize, neuron: usize },
    #[error("value {value} outside [0, 1] at index {index}")]
    OutOfRange { index: usize, value: f64 },
    #[error("layer index {index} out of range 1..={max}")]
    LayerIndex { index: usize, max: usize },
    #[error("pruning would remove all {width} neurons of hidden layer {layer}")]
    LayerEmptied { layer: usize, width: usize },
    #[error("invalid prune plan: {0}")]
    InvalidPlan(String),
    #[error("{path}: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad files or data rather than bad arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Io { .. }
                | Error::Csv(_)
                | Error::Diverged { .. }
                | Error::NonFiniteActivation { .. }
                | Error::Shape { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
