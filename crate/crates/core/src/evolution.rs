//! Dictionary diffing and view materialization.
//!
//! Stored values are never rewritten when a class evolves. Instead an
//! object written under one dictionary version is viewed under another by
//! composing the per-step plans along the linear version chain.

use crate::error::{Error, Result};
use crate::model::{default_value, CollectionInstance, DataDictionary, FieldSpec, ParameterValue, PrimitiveType};
use crate::store::{ObjectRef, Store};

#[derive(Debug, Clone, PartialEq)]
pub enum EvolutionAction {
    AddField { field: FieldSpec, fill: ParameterValue },
    DropField(String),
    /// Int→Float (or int[]→float[]) widening of a same-named field.
    WidenType(String),
    /// Applied last: position `i` of the result takes element `perm[i]` of
    /// the list produced by the preceding actions.
    Reorder(Vec<usize>),
}

/// Ordered actions turning values of one dictionary version into values of
/// another. Fields are matched by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionPlan {
    pub actions: Vec<EvolutionAction>,
}

impl EvolutionPlan {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewNotice {
    Filled(String),
    Dropped(String),
    Widened(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewResult {
    pub instance: CollectionInstance,
    pub notices: Vec<ViewNotice>,
}

fn is_widening(old: PrimitiveType, new: PrimitiveType) -> bool {
    matches!(
        (old, new),
        (PrimitiveType::Int, PrimitiveType::Float) | (PrimitiveType::IntArray, PrimitiveType::FloatArray)
    )
}

/// Computes the plan from `old` to `new`. A same-named field whose type
/// changes other than by widening makes the evolution incompatible.
pub fn diff_dictionaries(old: &DataDictionary, new: &DataDictionary) -> Result<EvolutionPlan> {
    let mut actions = Vec::new();
    let mut names: Vec<&str> = Vec::new();
    for field in &old.fields {
        match new.field(&field.name) {
            None => actions.push(EvolutionAction::DropField(field.name.clone())),
            Some((_, target)) => {
                if target.ty != field.ty {
                    if !is_widening(field.ty, target.ty) {
                        return Err(Error::IncompatibleEvolution {
                            name: field.name.clone(),
                            old: field.ty,
                            new: target.ty,
                        });
                    }
                    actions.push(EvolutionAction::WidenType(field.name.clone()));
                }
                names.push(&field.name);
            }
        }
    }
    for field in &new.fields {
        if old.field(&field.name).is_none() {
            let fill = default_value(field)?;
            actions.push(EvolutionAction::AddField {
                field: field.clone(),
                fill,
            });
            names.push(&field.name);
        }
    }
    let perm: Vec<usize> = new
        .fields
        .iter()
        .map(|f| names.iter().position(|n| *n == f.name).expect("every target field is placed"))
        .collect();
    if perm.iter().enumerate().any(|(i, &p)| i != p) {
        actions.push(EvolutionAction::Reorder(perm));
    }
    Ok(EvolutionPlan { actions })
}

/// Applies `plan` to values aligned with `old`'s fields.
pub fn apply_plan(
    plan: &EvolutionPlan,
    old: &DataDictionary,
    values: Vec<ParameterValue>,
    notices: &mut Vec<ViewNotice>,
) -> Vec<(String, ParameterValue)> {
    let mut work: Vec<(String, ParameterValue)> = old.fields.iter().map(|f| f.name.clone()).zip(values).collect();
    for action in &plan.actions {
        match action {
            EvolutionAction::DropField(name) => {
                work.retain(|(n, _)| n != name);
                notices.push(ViewNotice::Dropped(name.clone()));
            }
            EvolutionAction::WidenType(name) => {
                if let Some((_, v)) = work.iter_mut().find(|(n, _)| n == name) {
                    let target = match v {
                        ParameterValue::IntArray(_) => PrimitiveType::FloatArray,
                        _ => PrimitiveType::Float,
                    };
                    if let Some(widened) = v.coerce_to(target) {
                        *v = widened;
                    }
                }
                notices.push(ViewNotice::Widened(name.clone()));
            }
            EvolutionAction::AddField { field, fill } => {
                work.push((field.name.clone(), fill.clone()));
                notices.push(ViewNotice::Filled(field.name.clone()));
            }
            EvolutionAction::Reorder(perm) => {
                work = perm.iter().map(|&i| work[i].clone()).collect();
            }
        }
    }
    work
}

/// Views `values`, written under `dicts[from - 1]`, under `dicts[to - 1]`
/// by composing single-step diffs. `dicts` is the complete version chain of
/// one class.
pub fn view_through_chain(
    dicts: &[DataDictionary],
    from: u32,
    to: u32,
    values: Vec<ParameterValue>,
) -> Result<(Vec<ParameterValue>, Vec<ViewNotice>)> {
    let get = |v: u32| {
        (v as usize)
            .checked_sub(1)
            .and_then(|i| dicts.get(i))
            .ok_or_else(|| Error::NotFound(format!("dictionary version {v}")))
    };
    get(from)?;
    get(to)?;
    let steps: Vec<(u32, u32)> = if from <= to {
        (from..to).map(|v| (v, v + 1)).collect()
    } else {
        (to + 1..=from).rev().map(|v| (v, v - 1)).collect()
    };
    let mut notices = Vec::new();
    let mut current = values;
    for (a, b) in steps {
        let (old, new) = (get(a)?, get(b)?);
        let plan = diff_dictionaries(old, new)?;
        current = apply_plan(&plan, old, current, &mut notices)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
    }
    Ok((current, notices))
}

/// Materializes a stored revision under `target_dict_version` of its class.
/// Stored data is not modified.
pub fn materialize_view(store: &Store, reference: &ObjectRef, target_dict_version: u32) -> Result<ViewResult> {
    let stored = store.get_object(
        &reference.class_name,
        &reference.instance_name,
        Some(reference.object_version),
    )?;
    if stored.dict_version != reference.dict_version {
        return Err(Error::NotFound(format!(
            "{}/{} v{} is not bound to dictionary v{}",
            reference.class_name, reference.instance_name, reference.object_version, reference.dict_version
        )));
    }
    view_instance(store, stored, target_dict_version)
}

pub(crate) fn view_instance(store: &Store, stored: CollectionInstance, target_dict_version: u32) -> Result<ViewResult> {
    let latest = store.get_dictionary(&stored.class_name, None)?.dict_version;
    if target_dict_version == 0 || target_dict_version > latest {
        return Err(Error::NotFound(format!(
            "dictionary {} v{target_dict_version}",
            stored.class_name
        )));
    }
    if target_dict_version == stored.dict_version {
        return Ok(ViewResult {
            instance: stored,
            notices: Vec::new(),
        });
    }
    let (lo, hi) = (
        stored.dict_version.min(target_dict_version),
        stored.dict_version.max(target_dict_version),
    );
    // Chain with placeholders below `lo` so indices stay version - 1.
    let mut chain = Vec::with_capacity(hi as usize);
    for v in 1..=hi {
        if v < lo {
            chain.push(DataDictionary {
                class_name: stored.class_name.clone(),
                dict_version: v,
                fields: Vec::new(),
            });
        } else {
            chain.push(store.get_dictionary(&stored.class_name, Some(v))?);
        }
    }
    let (values, notices) = view_through_chain(&chain, stored.dict_version, target_dict_version, stored.values.clone())?;
    Ok(ViewResult {
        instance: CollectionInstance {
            dict_version: target_dict_version,
            values,
            ..stored
        },
        notices,
    })
}
