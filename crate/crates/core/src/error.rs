use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed JSON document; `offset` is the byte offset of the failure.
    #[error("JSON parse error at byte {offset}: {message}")]
    Json { offset: usize, message: String },

    /// A line of a line-delimited file could not be decoded.
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("invalid URL {0:?}")]
    Url(String),

    #[error("company database: {0}")]
    CompanyDb(String),

    #[error("regression: {0}")]
    Regression(String),

    #[error("percent change undefined for a zero baseline")]
    UndefinedChange,

    #[error("scenario: {0}")]
    Scenario(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn json(input: &[u8], err: &serde_json::Error) -> Self {
        Error::Json {
            offset: byte_offset(input, err.line(), err.column()),
            message: err.to_string(),
        }
    }
}

/// Converts serde_json's 1-based line / column into a byte offset.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut current = 1;
    let mut start = 0;
    for (i, b) in input.iter().enumerate() {
        if current == line {
            break;
        }
        if *b == b'\n' {
            current += 1;
            start = i + 1;
        }
    }
    (start + column.saturating_sub(1)).min(input.len())
}
