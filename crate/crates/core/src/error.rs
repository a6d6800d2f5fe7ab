use thiserror::Error;

/// Errors produced while ingesting, validating, or transforming a document.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion { found: u64 },

    #[error("invalid block at index {index}: {message}")]
    InvalidBlock { index: usize, message: String },

    #[error("invalid element at index {index}: {message}")]
    InvalidElement { index: usize, message: String },

    #[error("invalid table grid: {message}")]
    InvalidGrid { message: String },

    #[error("input is not valid UTF-8: {message}")]
    Encoding { message: String },

    #[error("captioning failed for element {element_id}: {message}")]
    Caption { element_id: String, message: String },

    #[error("invalid configuration: {message}")]
    Config { message: String },
}

/// The single schema version understood by all JSON interfaces.
pub const SCHEMA_VERSION: u64 = 1;

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap a serde_json error, converting its line/column position into a
    /// byte offset within `input`.
    pub(crate) fn from_json(err: &serde_json::Error, input: &[u8]) -> Error {
        Error::Parse {
            offset: byte_offset(input, err.line(), err.column()),
            message: classify_json_message(err),
        }
    }
}

/// serde_json reports positions as 1-based line and column; golden error
/// messages want a byte offset into the raw input.
fn byte_offset(input: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut remaining_newlines = line - 1;
    let mut offset = 0;
    for (i, b) in input.iter().enumerate() {
        if remaining_newlines == 0 {
            break;
        }
        if *b == b'\n' {
            remaining_newlines -= 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(input.len())
}

fn classify_json_message(err: &serde_json::Error) -> String {
    // Drop serde_json's trailing " at line N column M" so the offset is not
    // reported twice.
    let full = err.to_string();
    match full.find(" at line ") {
        Some(pos) => full[..pos].to_string(),
        None => full,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_offset_counts_previous_lines() {
        let input = b"{\n  \"a\": }";
        assert_eq!(byte_offset(input, 2, 3), 4);
        assert_eq!(byte_offset(input, 1, 1), 0);
    }

    #[test]
    fn byte_offset_clamps_to_input_len() {
        assert_eq!(byte_offset(b"{}", 5, 80), 2);
    }
}
