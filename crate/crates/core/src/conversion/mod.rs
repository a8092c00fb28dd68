//! Opaque addresses and the conversion service.
//!
//! Clients ask for an object by key, either an IOV folder path or an
//! externalized address. The service resolves the key, loads the stored
//! revision, builds a transient object with the class's converter and
//! caches it in a per-context [`TransientStore`].

mod address;
mod registry;
mod service;

pub use address::{externalize, internalize, OpaqueAddress, SCHEME};
pub use registry::{BlobLoader, ConverterRegistry, ConverterSpec, GenericObject, GenericParam, TransientObject};
pub use service::{resolve_key, retrieve, retrieve_as, PersistentSource, RetrievalContext, TransientStore};
