use std::fmt;

/// The two components of a two-term objective `f = g1 + g2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    G1,
    G2,
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::G1 => f.write_str("g1"),
            Component::G2 => f.write_str("g2"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unsupported snapshot version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    /// A term observed in the document has zero probability under every topic.
    #[error("degenerate support: term {term} has zero probability under every topic")]
    DegenerateSupport { term: u32 },

    #[error("non-finite {component} gradient at point {point:?}")]
    NonFinite { component: Component, point: Vec<f64> },

    #[error("unknown inference method {0:?} (expected ope, vb or cgs)")]
    UnknownMethod(String),

    #[error("unknown learner {0:?} (expected ml-ope, online-ope or streaming-ope)")]
    UnknownLearner(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("empty minibatch")]
    EmptyBatch,

    #[error("document has too few tokens ({0})")]
    EmptyDocument(usize),

    #[error("step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format { line, msg: msg.into() }
}
