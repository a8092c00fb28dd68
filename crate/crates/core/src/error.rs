use std::io;

use thiserror::Error;

use crate::model::{PrimitiveType, ValidationReport};

/// Errors raised while parsing or checking core-model values.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown primitive type `{0}`")]
    UnknownType(String),
    #[error("malformed literal: {0}")]
    MalformedLiteral(String),
    #[error("float value is not finite")]
    NonFiniteFloat,
    #[error("blob field `{0}` has no default and blobs have no zero value")]
    NoDefaultForBlob(String),
    #[error("invalid identifier `{0}`")]
    InvalidIdentifier(String),
    #[error("invalid scope path `{0}`")]
    InvalidScope(String),
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-wide error. Variant names double as the machine-readable error
/// codes exposed by the HTTP service (see [`Error::code`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),

    // storage-engine
    #[error("store is read-only")]
    ReadOnlyStore,
    #[error("store is locked by another read-write handle")]
    StoreLocked,
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("validation failed: {0}")]
    ValidationFailed(ValidationReport),
    #[error("blob checksum mismatch for blob {0}")]
    BlobChecksumMismatch(u64),
    #[error("unknown blob reference {0}")]
    UnknownBlob(String),
    #[error("corrupt store: {0}")]
    Corrupt(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    // evolution
    #[error("incompatible evolution of field `{name}`: {old} -> {new}")]
    IncompatibleEvolution {
        name: String,
        old: PrimitiveType,
        new: PrimitiveType,
    },

    // iov
    #[error("unknown folder `{0}`")]
    UnknownFolder(String),
    #[error("folder `{0}` already exists")]
    DuplicateFolder(String),
    #[error("malformed folder path `{0}`")]
    MalformedPath(String),
    #[error("since {since} is not greater than the open HEAD entry's since {head_since}")]
    NonMonotonicSince { since: u64, head_since: u64 },
    #[error("unknown tag `{0}`")]
    UnknownTag(String),
    #[error("no valid entry at t={0}")]
    NoValidEntry(u64),
    #[error("HEAD of folder `{0}` has no entries")]
    EmptyHead(String),
    #[error("tag `{0}` already exists")]
    DuplicateTag(String),
    #[error("tag name `{0}` is reserved")]
    ReservedTagName(String),

    // conversion
    #[error("malformed address: {0}")]
    MalformedAddress(String),
    #[error("converter for class `{0}` already registered")]
    DuplicateConverter(String),
    #[error("no converter registered for class `{0}`")]
    NoConverter(String),
    #[error("transient store was populated under a different retrieval context")]
    CacheContextMismatch,
    #[error("converter failed: {0}")]
    ConversionFailed(String),

    // sync
    #[error("requested sequence {requested} is ahead of current {current}")]
    FutureSequence { requested: u64, current: u64 },
    #[error("changeset checksum mismatch")]
    ChecksumMismatch,
    #[error("changeset comes from a different master")]
    WrongMaster,
    #[error("non-contiguous changeset: expected from_seq {expected}, got {got}")]
    NonContiguous { expected: u64, got: u64 },
    #[error("store is not a replica or was mutated locally")]
    LocalMutationConflict,
    #[error("malformed changeset: {0}")]
    MalformedChangeset(String),

    // interfaces
    #[error("xml parse error: {0}")]
    XmlParseError(String),
    #[error("malformed row at line {line}: {detail}")]
    MalformedRow { line: usize, detail: String },
}

impl Error {
    /// Stable machine-readable code for this error.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Model(m) => match m {
                ModelError::UnknownType(_) => "UnknownType",
                ModelError::MalformedLiteral(_) => "MalformedLiteral",
                ModelError::NonFiniteFloat => "NonFiniteFloat",
                ModelError::NoDefaultForBlob(_) => "NoDefaultForBlob",
                ModelError::InvalidIdentifier(_) => "InvalidIdentifier",
                ModelError::InvalidScope(_) => "InvalidScope",
                ModelError::InvalidDictionary(_) => "InvalidDictionary",
            },
            Error::ReadOnlyStore => "ReadOnlyStore",
            Error::StoreLocked => "StoreLocked",
            Error::UnknownClass(_) => "UnknownClass",
            Error::NotFound(_) => "NotFound",
            Error::ValidationFailed(_) => "ValidationFailed",
            Error::BlobChecksumMismatch(_) => "ChecksumMismatch",
            Error::UnknownBlob(_) => "UnknownBlob",
            Error::Corrupt(_) => "Corrupt",
            Error::Io(_) => "Io",
            Error::IncompatibleEvolution { .. } => "IncompatibleEvolution",
            Error::UnknownFolder(_) => "UnknownFolder",
            Error::DuplicateFolder(_) => "DuplicateFolder",
            Error::MalformedPath(_) => "MalformedPath",
            Error::NonMonotonicSince { .. } => "NonMonotonicSince",
            Error::UnknownTag(_) => "UnknownTag",
            Error::NoValidEntry(_) => "NoValidEntry",
            Error::EmptyHead(_) => "EmptyHead",
            Error::DuplicateTag(_) => "DuplicateTag",
            Error::ReservedTagName(_) => "ReservedTagName",
            Error::MalformedAddress(_) => "MalformedAddress",
            Error::DuplicateConverter(_) => "DuplicateConverter",
            Error::NoConverter(_) => "NoConverter",
            Error::CacheContextMismatch => "CacheContextMismatch",
            Error::ConversionFailed(_) => "ConversionFailed",
            Error::FutureSequence { .. } => "FutureSequence",
            Error::ChecksumMismatch => "ChecksumMismatch",
            Error::WrongMaster => "WrongMaster",
            Error::NonContiguous { .. } => "NonContiguous",
            Error::LocalMutationConflict => "LocalMutationConflict",
            Error::MalformedChangeset(_) => "MalformedChangeset",
            Error::XmlParseError(_) => "XmlParseError",
            Error::MalformedRow { .. } => "MalformedRow",
        }
    }
}
