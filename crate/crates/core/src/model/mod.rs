//! Parameter model: primitive values, data dictionaries, scopes and
//! collection instances.

mod dictionary;
mod scope;
mod validate;
mod value;

pub use dictionary::{default_value, DataDictionary, DictionaryDraft, FieldSpec};
pub use scope::ScopePath;
pub(crate) use validate::{validate_values, widen_values};
pub use validate::{validate_collection, ValidationIssue, ValidationNotice, ValidationReport};
pub use value::{parse_primitive, BlobLink, BlobRef, ParameterValue, PrimitiveType};

use crate::error::ModelError;

/// `[A-Za-z_][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b.is_ascii_alphabetic() || b == b'_' => {}
        _ => return false,
    }
    bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

pub fn validate_identifier(s: &str) -> Result<(), ModelError> {
    if is_identifier(s) {
        Ok(())
    } else {
        Err(ModelError::InvalidIdentifier(s.to_string()))
    }
}

/// One revision of a named, scoped parameter collection.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionInstance {
    pub class_name: String,
    pub instance_name: String,
    pub scope: ScopePath,
    pub dict_version: u32,
    pub object_version: u32,
    /// Aligned with the dictionary's fields.
    pub values: Vec<ParameterValue>,
}
