//! Bibliographic records, topical subset selection and the cleaned
//! document-term representation.

mod matrix;
mod preprocess;
mod records;
mod select;

pub use matrix::{build_matrix, read_archive, write_archive, CorpusManifest, ProcessedCorpus};
pub use preprocess::{preprocess, tokenize, StopwordConfig};
pub use records::{
    load_records, ColumnSchema, DocumentRecord, InputFormat, JournalType, LoadOptions, LoadSummary,
    PaperType,
};
pub use select::{operator_matches, select_subset};
