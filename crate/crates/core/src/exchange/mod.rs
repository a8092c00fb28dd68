//! Document formats: XML export/import and tabular import.

mod table;
mod xml;

pub use table::import_table;
pub use xml::{export_xml, import_xml, DOCUMENT_VERSION, XML_DECLARATION};

/// Outcome of a successful import. Imports are transactional, so a failed
/// import returns an error and commits nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ImportReport {
    pub collections_imported: usize,
    pub dictionaries_registered: usize,
    pub warnings: Vec<String>,
    pub errors: Vec<String>,
}
