use crate::corpus::records::DocumentRecord;
use crate::error::{Error, Result};

/// Lowercase ASCII words for operator matching; every non-letter is a boundary.
fn words(text: &str) -> Vec<String> {
    deunicode::deunicode(text)
        .to_ascii_lowercase()
        .split(|c: char| !c.is_ascii_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// True when the operator (one or more stem words) occurs as a run of
/// consecutive words, each operator word being a prefix of the text word.
pub fn operator_matches(operator: &str, text: &str) -> bool {
    let pattern = words(operator);
    if pattern.is_empty() {
        return false;
    }
    let text = words(text);
    text.windows(pattern.len()).any(|window| {
        window
            .iter()
            .zip(&pattern)
            .all(|(word, stem)| word.starts_with(stem.as_str()))
    })
}

fn record_matches(record: &DocumentRecord, operators: &[String]) -> bool {
    operators.iter().any(|op| {
        operator_matches(op, &record.title)
            || operator_matches(op, &record.r#abstract)
            || record.keywords.iter().any(|k| operator_matches(op, k))
    })
}

/// Records where at least one operator matches title, abstract or a keyword.
pub fn select_subset(records: &[DocumentRecord], operators: &[String]) -> Result<Vec<DocumentRecord>> {
    if operators.iter().all(|o| words(o).is_empty()) {
        return Err(Error::InvalidParameter("operator list is empty".into()));
    }
    Ok(records
        .iter()
        .filter(|r| record_matches(r, operators))
        .cloned()
        .collect())
}
