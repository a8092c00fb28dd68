use std::any::Any;
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evolution::view_instance;
use crate::iov::{Timestamp, HEAD};
use crate::model::{BlobLink, BlobRef, CollectionInstance, DataDictionary};
use crate::store::Store;

use super::address::{internalize, OpaqueAddress};
use super::registry::{BlobLoader, ConverterRegistry, TransientObject};

/// What the conversion service needs from persistent storage.
pub trait PersistentSource: BlobLoader {
    /// The addressed revision, viewed under the address's dictionary
    /// version, together with that dictionary.
    fn load(&self, addr: &OpaqueAddress) -> Result<(CollectionInstance, DataDictionary)>;
    fn has_folder(&self, path: &str) -> bool;
    fn resolve(&self, folder: &str, tag: &str, t: Timestamp) -> Result<String>;
}

impl BlobLoader for Store {
    fn load_blob(&self, link: &BlobLink) -> Result<Vec<u8>> {
        let reference: BlobRef = self.blob_ref(link.blob_id)?;
        if reference.checksum != link.checksum {
            return Err(Error::NotFound(link.to_string()));
        }
        self.get_blob(&reference)
    }
}

impl PersistentSource for Store {
    fn load(&self, addr: &OpaqueAddress) -> Result<(CollectionInstance, DataDictionary)> {
        let stored = self.get_object(&addr.class_name, &addr.instance_name, Some(addr.object_version))?;
        let view = view_instance(self, stored, addr.dict_version)?;
        let dict = self.get_dictionary(&addr.class_name, Some(addr.dict_version))?;
        Ok((view.instance, dict))
    }

    fn has_folder(&self, path: &str) -> bool {
        self.folder_exists(path)
    }

    fn resolve(&self, folder: &str, tag: &str, t: Timestamp) -> Result<String> {
        self.iov_resolve(folder, tag, t)
    }
}

/// Event-scoped retrieval parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetrievalContext {
    pub timestamp: Timestamp,
    pub tag: String,
}

impl RetrievalContext {
    pub fn at(timestamp: Timestamp) -> Self {
        RetrievalContext {
            timestamp,
            tag: HEAD.to_string(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }
}

/// Per-context cache of built objects keyed by retrieval key.
#[derive(Default)]
pub struct TransientStore {
    context: Option<RetrievalContext>,
    entries: HashMap<String, (TransientObject, OpaqueAddress)>,
}

impl TransientStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Drops every cached object and binds the store to `context`.
    pub fn reset(&mut self, context: RetrievalContext) {
        self.entries.clear();
        self.context = Some(context);
    }

    pub fn context(&self) -> Option<&RetrievalContext> {
        self.context.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&TransientObject> {
        self.entries.get(key).map(|(obj, _)| obj)
    }

    /// Address the object cached under `key` was built from.
    pub fn address_of(&self, key: &str) -> Option<&OpaqueAddress> {
        self.entries.get(key).map(|(_, addr)| addr)
    }
}

/// Resolves `key` to an address: keys containing `://` are addresses,
/// anything else names an IOV folder resolved at the context's tag and
/// timestamp.
pub fn resolve_key(source: &dyn PersistentSource, key: &str, ctx: &RetrievalContext) -> Result<OpaqueAddress> {
    if key.contains("://") {
        return internalize(key);
    }
    if !source.has_folder(key) {
        return Err(Error::UnknownFolder(key.to_string()));
    }
    internalize(&source.resolve(key, &ctx.tag, ctx.timestamp)?)
}

/// Returns the transient object for `key`, building and caching it on
/// first use within the store's context.
pub fn retrieve(
    source: &dyn PersistentSource,
    registry: &ConverterRegistry,
    tstore: &mut TransientStore,
    key: &str,
    ctx: &RetrievalContext,
) -> Result<TransientObject> {
    match &tstore.context {
        Some(bound) if bound != ctx => return Err(Error::CacheContextMismatch),
        Some(_) => {}
        None => tstore.context = Some(ctx.clone()),
    }
    if let Some((obj, _)) = tstore.entries.get(key) {
        return Ok(obj.clone());
    }
    let addr = resolve_key(source, key, ctx)?;
    let (instance, dict) = source.load(&addr)?;
    let converter = registry
        .lookup(&addr.class_name)
        .ok_or_else(|| Error::NoConverter(addr.class_name.clone()))?;
    let obj = converter.build(&instance, &dict, source)?;
    tstore.entries.insert(key.to_string(), (obj.clone(), addr));
    Ok(obj)
}

/// [`retrieve`] followed by a downcast to `T`.
pub fn retrieve_as<T: Any + Send + Sync>(
    source: &dyn PersistentSource,
    registry: &ConverterRegistry,
    tstore: &mut TransientStore,
    key: &str,
    ctx: &RetrievalContext,
) -> Result<Arc<T>> {
    retrieve(source, registry, tstore, key, ctx)?
        .downcast::<T>()
        .map_err(|_| Error::ConversionFailed(format!("object under `{key}` has a different type")))
}
