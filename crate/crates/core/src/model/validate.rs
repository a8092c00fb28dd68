use std::fmt;

use super::{CollectionInstance, DataDictionary, ParameterValue, PrimitiveType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationIssue {
    ClassMismatch { expected: String, got: String },
    MissingField(String),
    ExtraValue(usize),
    TypeMismatch {
        name: String,
        expected: PrimitiveType,
        got: PrimitiveType,
    },
    NonFiniteFloat(String),
    DuplicateName(String),
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationIssue::ClassMismatch { expected, got } => {
                write!(f, "class mismatch: expected {expected}, got {got}")
            }
            ValidationIssue::MissingField(name) => write!(f, "missing field {name}"),
            ValidationIssue::ExtraValue(index) => write!(f, "extra value at index {index}"),
            ValidationIssue::TypeMismatch { name, expected, got } => {
                write!(f, "type mismatch for {name}: expected {expected}, got {got}")
            }
            ValidationIssue::NonFiniteFloat(name) => write!(f, "non-finite float in {name}"),
            ValidationIssue::DuplicateName(name) => write!(f, "duplicate parameter name {name}"),
        }
    }
}

/// Informational findings that do not make a collection invalid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationNotice {
    Widened(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
    pub notices: Vec<ValidationNotice>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn issue(issue: ValidationIssue) -> Self {
        ValidationReport {
            issues: vec![issue],
            notices: Vec::new(),
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

/// Checks value count, order and types of `instance` against `dict`.
/// Int values in Float fields are accepted and reported as widening notices.
pub fn validate_collection(instance: &CollectionInstance, dict: &DataDictionary) -> ValidationReport {
    validate_values(&instance.class_name, &instance.values, dict)
}

pub(crate) fn validate_values(
    class_name: &str,
    values: &[ParameterValue],
    dict: &DataDictionary,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    if class_name != dict.class_name {
        report.issues.push(ValidationIssue::ClassMismatch {
            expected: dict.class_name.clone(),
            got: class_name.to_string(),
        });
    }
    for (index, field) in dict.fields.iter().enumerate() {
        let Some(value) = values.get(index) else {
            report.issues.push(ValidationIssue::MissingField(field.name.clone()));
            continue;
        };
        let got = value.primitive_type();
        if got != field.ty {
            if value.coerce_to(field.ty).is_some() {
                report.notices.push(ValidationNotice::Widened(field.name.clone()));
            } else {
                report.issues.push(ValidationIssue::TypeMismatch {
                    name: field.name.clone(),
                    expected: field.ty,
                    got,
                });
                continue;
            }
        }
        if !value.is_finite() {
            report.issues.push(ValidationIssue::NonFiniteFloat(field.name.clone()));
        }
    }
    for index in dict.fields.len()..values.len() {
        report.issues.push(ValidationIssue::ExtraValue(index));
    }
    report
}

/// Applies the widenings a clean report allows, yielding values whose types
/// equal the dictionary's field types.
pub(crate) fn widen_values(values: &[ParameterValue], dict: &DataDictionary) -> Vec<ParameterValue> {
    values
        .iter()
        .zip(&dict.fields)
        .map(|(v, f)| v.coerce_to(f.ty).unwrap_or_else(|| v.clone()))
        .collect()
}
