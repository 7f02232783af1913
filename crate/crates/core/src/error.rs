use std::path::PathBuf;

/// Errors produced by the clustering library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}index {index} out of range for {n} samples", line_prefix(*.line))]
    IndexOutOfRange {
        line: Option<usize>,
        index: usize,
        n: usize,
    },

    #[error("pair ({i}, {j}) is listed both as a must-link and as a cannot-link")]
    ConflictingLink { i: usize, j: usize },

    #[error("{}self-link on sample {index} is not allowed", line_prefix(*.line))]
    SelfLink { line: Option<usize>, index: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("requested {requested} links but only {available} distinct pairs exist")]
    TooManyLinks { requested: usize, available: usize },

    #[error("cannot-link weight eta must be zero when there are more than two classes (got eta = {eta}, c = {classes})")]
    EtaWithMulticlass { eta: f64, classes: usize },

    #[error("dataset has no ground-truth labels")]
    MissingLabels,

    #[error("class {class} has no samples in the training data")]
    MissingClass { class: usize },

    #[error("symmetric eigensolver did not converge on a {n}x{n} matrix")]
    NoConvergence { n: usize },

    #[error("eigenvalue {value:e} of cluster {cluster} is not positive; out-of-sample prediction is undefined for this model")]
    NonPositiveEigenvalue { cluster: usize, value: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("all {count} candidates failed: {}", .reasons.join("; "))]
    AllCandidatesFailed { count: usize, reasons: Vec<String> },

    #[error("unsupported model schema '{0}'")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn line_prefix(line: Option<usize>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}

impl Error {
    /// True for errors caused by bad input rather than by a numerical or
    /// internal failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NonPositiveEigenvalue { .. }
                | Error::Numerical(_)
                | Error::AllCandidatesFailed { .. }
                | Error::MissingClass { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
