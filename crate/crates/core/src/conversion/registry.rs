use std::any::Any;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{BlobLink, CollectionInstance, DataDictionary, ParameterValue, PrimitiveType, ScopePath};

/// A built transient object. Clients downcast to their concrete type.
pub type TransientObject = Arc<dyn Any + Send + Sync>;

/// Access to blob contents while building an object.
pub trait BlobLoader {
    fn load_blob(&self, link: &BlobLink) -> Result<Vec<u8>>;
}

type BuildFn =
    dyn Fn(&CollectionInstance, &DataDictionary, &dyn BlobLoader) -> Result<TransientObject> + Send + Sync;

/// Builds transient objects of one class from stored collections.
#[derive(Clone)]
pub struct ConverterSpec {
    pub class_name: String,
    build: Arc<BuildFn>,
}

impl fmt::Debug for ConverterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConverterSpec").field("class_name", &self.class_name).finish()
    }
}

impl ConverterSpec {
    pub fn new<T, F>(class_name: impl Into<String>, build: F) -> Self
    where
        T: Any + Send + Sync,
        F: Fn(&CollectionInstance, &DataDictionary, &dyn BlobLoader) -> Result<T> + Send + Sync + 'static,
    {
        ConverterSpec {
            class_name: class_name.into(),
            build: Arc::new(move |inst, dict, blobs| Ok(Arc::new(build(inst, dict, blobs)?) as TransientObject)),
        }
    }

    /// Converter producing a [`GenericObject`].
    pub fn generic(class_name: impl Into<String>) -> Self {
        ConverterSpec::new(class_name, |inst, dict, _| Ok(GenericObject::build(inst, dict)))
    }

    pub fn build(
        &self,
        instance: &CollectionInstance,
        dict: &DataDictionary,
        blobs: &dyn BlobLoader,
    ) -> Result<TransientObject> {
        (self.build)(instance, dict, blobs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericParam {
    pub name: String,
    pub ty: PrimitiveType,
    pub unit: Option<String>,
    pub comment: String,
    pub value: ParameterValue,
}

/// Name→value view of a collection, produced by the default converter.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericObject {
    pub class_name: String,
    pub instance_name: String,
    pub scope: ScopePath,
    pub object_version: u32,
    pub dict_version: u32,
    pub params: Vec<GenericParam>,
}

impl GenericObject {
    pub fn build(instance: &CollectionInstance, dict: &DataDictionary) -> Self {
        GenericObject {
            class_name: instance.class_name.clone(),
            instance_name: instance.instance_name.clone(),
            scope: instance.scope.clone(),
            object_version: instance.object_version,
            dict_version: instance.dict_version,
            params: dict
                .fields
                .iter()
                .zip(&instance.values)
                .map(|(f, v)| GenericParam {
                    name: f.name.clone(),
                    ty: f.ty,
                    unit: f.unit.clone(),
                    comment: f.comment.clone(),
                    value: v.clone(),
                })
                .collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParameterValue> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }
}

/// Converters by class name, with an optional generic fallback.
#[derive(Debug, Clone, Default)]
pub struct ConverterRegistry {
    converters: HashMap<String, ConverterSpec>,
    generic_fallback: bool,
}

impl ConverterRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry that builds [`GenericObject`]s for classes without an
    /// explicit converter.
    pub fn with_generic_default() -> Self {
        ConverterRegistry {
            converters: HashMap::new(),
            generic_fallback: true,
        }
    }

    pub fn register_converter(&mut self, spec: ConverterSpec) -> Result<()> {
        if self.converters.contains_key(&spec.class_name) {
            return Err(Error::DuplicateConverter(spec.class_name));
        }
        self.converters.insert(spec.class_name.clone(), spec);
        Ok(())
    }

    pub fn lookup(&self, class_name: &str) -> Option<ConverterSpec> {
        self.converters
            .get(class_name)
            .cloned()
            .or_else(|| self.generic_fallback.then(|| ConverterSpec::generic(class_name)))
    }
}
