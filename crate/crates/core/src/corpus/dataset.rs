use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{AnnotatedExample, CorpusError};

/// Parses line-delimited JSON records. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_dataset(text: &str) -> Result<Vec<AnnotatedExample>, CorpusError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let example: AnnotatedExample =
            serde_json::from_str(line).map_err(|e| CorpusError::Schema {
                line: line_no,
                message: e.to_string(),
            })?;
        example.check().map_err(|message| CorpusError::Schema {
            line: line_no,
            message: format!("example `{}`: {message}", example.id),
        })?;
        if !seen.insert(example.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: example.id,
            });
        }
        out.push(example);
    }
    Ok(out)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<AnnotatedExample>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

/// One JSON record per line, each terminated by a newline.
pub fn to_jsonl(examples: &[AnnotatedExample]) -> String {
    let mut out = String::new();
    for example in examples {
        out.push_str(&serde_json::to_string(example).expect("examples serialize"));
        out.push('\n');
    }
    out
}

pub fn write_dataset(
    examples: &[AnnotatedExample],
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let path = path.as_ref();
    fs::write(path, to_jsonl(examples)).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}
