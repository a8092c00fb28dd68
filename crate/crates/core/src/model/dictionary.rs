use std::collections::HashSet;

use crate::error::ModelError;

use super::{validate_identifier, ParameterValue, PrimitiveType};

/// One field of a data dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub ty: PrimitiveType,
    pub comment: String,
    pub unit: Option<String>,
    pub default: Option<ParameterValue>,
}

impl FieldSpec {
    pub fn new(name: impl Into<String>, ty: PrimitiveType) -> Self {
        FieldSpec {
            name: name.into(),
            ty,
            comment: String::new(),
            unit: None,
            default: None,
        }
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = comment.into();
        self
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = Some(unit.into());
        self
    }

    pub fn with_default(mut self, default: ParameterValue) -> Self {
        self.default = Some(default);
        self
    }

    pub fn check(&self) -> Result<(), ModelError> {
        validate_identifier(&self.name)?;
        if let Some(default) = &self.default {
            if default.primitive_type() != self.ty {
                return Err(ModelError::InvalidDictionary(format!(
                    "default of `{}` is {} but the field is {}",
                    self.name,
                    default.primitive_type(),
                    self.ty
                )));
            }
            if !default.is_finite() {
                return Err(ModelError::NonFiniteFloat);
            }
        }
        Ok(())
    }
}

/// Value used for a field when no stored value exists: the declared default,
/// otherwise the type's zero value.
pub fn default_value(spec: &FieldSpec) -> Result<ParameterValue, ModelError> {
    if let Some(default) = &spec.default {
        return Ok(default.clone());
    }
    Ok(match spec.ty {
        PrimitiveType::Int => ParameterValue::Int(0),
        PrimitiveType::Float => ParameterValue::Float(0.0),
        PrimitiveType::Bool => ParameterValue::Bool(false),
        PrimitiveType::String => ParameterValue::String(String::new()),
        PrimitiveType::IntArray => ParameterValue::IntArray(Vec::new()),
        PrimitiveType::FloatArray => ParameterValue::FloatArray(Vec::new()),
        PrimitiveType::StringArray => ParameterValue::StringArray(Vec::new()),
        PrimitiveType::BlobRef => return Err(ModelError::NoDefaultForBlob(spec.name.clone())),
    })
}

/// A class schema that has not been assigned a version yet.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryDraft {
    pub class_name: String,
    pub fields: Vec<FieldSpec>,
}

impl DictionaryDraft {
    pub fn new(class_name: impl Into<String>, fields: Vec<FieldSpec>) -> Self {
        DictionaryDraft {
            class_name: class_name.into(),
            fields,
        }
    }

    pub fn check(&self) -> Result<(), ModelError> {
        validate_identifier(&self.class_name)?;
        check_fields(&self.fields)
    }

    pub fn with_version(self, dict_version: u32) -> DataDictionary {
        DataDictionary {
            class_name: self.class_name,
            dict_version,
            fields: self.fields,
        }
    }
}

/// Persistent schema of one parameter-collection class at one version.
/// A field's index is its position in `fields`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataDictionary {
    pub class_name: String,
    pub dict_version: u32,
    pub fields: Vec<FieldSpec>,
}

impl DataDictionary {
    pub fn field(&self, name: &str) -> Option<(usize, &FieldSpec)> {
        self.fields.iter().enumerate().find(|(_, f)| f.name == name)
    }

    pub fn check(&self) -> Result<(), ModelError> {
        validate_identifier(&self.class_name)?;
        if self.dict_version == 0 {
            return Err(ModelError::InvalidDictionary("dict_version must be >= 1".into()));
        }
        check_fields(&self.fields)
    }
}

fn check_fields(fields: &[FieldSpec]) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for field in fields {
        field.check()?;
        if !seen.insert(field.name.as_str()) {
            return Err(ModelError::InvalidDictionary(format!(
                "duplicate field name `{}`",
                field.name
            )));
        }
    }
    Ok(())
}
