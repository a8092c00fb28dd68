//! Versioned, dictionary-driven parameter database.
//!
//! Parameters are grouped into collections whose schema is a versioned
//! [`model::DataDictionary`]. Collections are stored as immutable revisions
//! in a [`Store`], viewed under any compatible dictionary version through
//! [`evolution`], looked up by time through [`iov`] folders, turned into
//! client objects by the [`conversion`] service and replicated one way with
//! [`sync`] changesets.

pub mod error;
pub mod evolution;
pub mod iov;
pub mod model;
pub mod store;
pub mod conversion;
pub mod sync;
pub mod exchange;

pub use error::{Error, ModelError, Result};
pub use iov::{Timestamp, HEAD};
pub use model::{CollectionInstance, DataDictionary, FieldSpec, ParameterValue, PrimitiveType, ScopePath};
pub use store::{ObjectRef, Store, StoreMode};
