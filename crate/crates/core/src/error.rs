use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("FASTA input is empty")]
    EmptyFasta,
    #[error("FASTA record `{0}` has no sequence")]
    EmptyRecord(String),
    #[error("sequence data before the first '>' header (line {line})")]
    MalformedHeader { line: usize },
    #[error("ambiguous base {symbol:?} at position {position}")]
    AmbiguousBase { position: usize, symbol: char },
    #[error("sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("genome of length {length} is too short (needs at least {required})")]
    GenomeTooShort { length: usize, required: usize },
    #[error("distribution orders differ ({left} vs {right})")]
    OrderMismatch { left: usize, right: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("hamming distance requested but the mutation config changes lengths")]
    HammingWithIndels,
    #[error("quadratic fit needs at least 3 distinct abscissae, got {0}")]
    DegenerateDesign(usize),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("cluster count {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("cluster-count range {lo}..={hi} outside 2..={max}")]
    BadRange { lo: usize, hi: usize, max: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("distance matrix is not symmetric with zero diagonal")]
    AsymmetricInput,
    #[error("need at least {required} points, got {got}")]
    TooFewPoints { got: usize, required: usize },
    #[error("assignment id sets differ: {0}")]
    IdMismatch(String),
    #[error("cannot plant {count} outliers in a corpus of {size}")]
    CountTooLarge { count: usize, size: usize },
    #[error("corpus is empty")]
    CorpusEmpty,
    #[error("unknown genome id `{0}`")]
    UnknownGenome(String),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Missing or unreadable inputs count as data errors; other I/O failures
/// (full disk, broken pipe) do not.
pub fn io_is_data_error(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::NotFound | io::ErrorKind::InvalidData | io::ErrorKind::InvalidInput | io::ErrorKind::PermissionDenied
    )
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input data or configuration rather than
    /// by the environment.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io(e) => io_is_data_error(e),
            Error::Stage { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
