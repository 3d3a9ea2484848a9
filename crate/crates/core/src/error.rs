use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{function}({x}) is undefined: argument must be positive")]
    Domain { function: &'static str, x: f64 },

    #[error("{0} requires a nonempty input")]
    EmptyInput(&'static str),

    #[error("objective is not finite at the starting point")]
    NonFiniteStart,

    #[error("prior overflow for document {doc:?}, topic {topic}: x.lambda = {dot}")]
    AlphaOverflow {
        doc: Option<usize>,
        topic: usize,
        dot: f64,
    },

    #[error("all document dates are equal ({0}); date proportions are undefined")]
    DegenerateDates(i64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("corpus has no tokens to train on")]
    EmptyCorpus,

    #[error("unknown feature index {0}")]
    UnknownFeature(usize),
}

impl Error {
    /// Attaches a document index to an [`Error::AlphaOverflow`].
    pub(crate) fn at_doc(self, d: usize) -> Self {
        match self {
            Error::AlphaOverflow { topic, dot, .. } => Error::AlphaOverflow {
                doc: Some(d),
                topic,
                dot,
            },
            other => other,
        }
    }
}
