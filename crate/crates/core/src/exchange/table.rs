//! Pipe-separated tabular import.
//!
//! ```text
//! #class ATLASMotherVolume
//! #instance default
//! #scope /ATLAS
//! Version|int|2||2001 VERSION WITH ENDCAP SHIFTED B
//! Rmin|float|0.0||Inner Radius
//! ```
//!
//! `#class` opens a block; `#instance` (default `default`) and `#scope`
//! (default `/`) apply to it. An `#instance` or `#scope` line after rows
//! opens a further block of the same class. Other `#` lines and blank
//! lines are ignored. Rows are `name|type|value|unit|comment`; an empty
//! unit means none, and the comment may contain `|`.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::model::{
    DictionaryDraft, FieldSpec, ParameterValue, PrimitiveType, ScopePath, ValidationIssue, ValidationReport,
};
use crate::store::Store;

use super::ImportReport;

const DEFAULT_INSTANCE: &str = "default";

#[derive(Debug)]
struct Row {
    line: usize,
    field: FieldSpec,
    literal: String,
}

#[derive(Debug)]
struct Block {
    class_name: String,
    instance_name: String,
    scope: ScopePath,
    rows: Vec<Row>,
}

impl Block {
    fn new(class_name: String) -> Self {
        Block {
            class_name,
            instance_name: DEFAULT_INSTANCE.to_string(),
            scope: ScopePath::root(),
            rows: Vec::new(),
        }
    }
}

fn malformed(line: usize, detail: impl Into<String>) -> Error {
    Error::MalformedRow {
        line,
        detail: detail.into(),
    }
}

fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks: Vec<Block> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(directive) = trimmed.strip_prefix('#') {
            let (key, arg) = directive.split_once(char::is_whitespace).unwrap_or((directive, ""));
            let arg = arg.trim();
            match key {
                "class" => {
                    if arg.is_empty() {
                        return Err(malformed(line, "#class needs a name"));
                    }
                    blocks.push(Block::new(arg.to_string()));
                }
                "instance" | "scope" => {
                    let Some(current) = blocks.last_mut() else {
                        return Err(malformed(line, format!("#{key} before #class")));
                    };
                    if !current.rows.is_empty() {
                        let mut next = Block::new(current.class_name.clone());
                        next.instance_name = current.instance_name.clone();
                        next.scope = current.scope.clone();
                        blocks.push(next);
                    }
                    let current = blocks.last_mut().expect("block pushed above");
                    if key == "instance" {
                        if arg.is_empty() {
                            return Err(malformed(line, "#instance needs a name"));
                        }
                        current.instance_name = arg.to_string();
                    } else {
                        current.scope = ScopePath::parse(arg).map_err(|e| malformed(line, e.to_string()))?;
                    }
                }
                _ => {}
            }
            continue;
        }
        let Some(block) = blocks.last_mut() else {
            return Err(malformed(line, "row before #class"));
        };
        let cols: Vec<&str> = raw.splitn(5, '|').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(malformed(line, format!("expected 5 columns, found {}", cols.len())));
        }
        let ty: PrimitiveType = cols[1].parse().map_err(|e: crate::ModelError| malformed(line, e.to_string()))?;
        let mut field = FieldSpec::new(cols[0], ty).with_comment(cols[4]);
        if !cols[3].is_empty() {
            field = field.with_unit(cols[3]);
        }
        field.check().map_err(|e| malformed(line, e.to_string()))?;
        ParameterValue::parse(ty, cols[2]).map_err(|e| malformed(line, e.to_string()))?;
        block.rows.push(Row {
            line,
            field,
            literal: cols[2].to_string(),
        });
    }
    Ok(blocks)
}

/// Imports every block of a table document in one transaction.
pub fn import_table(store: &Store, text: &str) -> Result<ImportReport> {
    let blocks = parse_blocks(text)?;
    if blocks.is_empty() {
        return Ok(ImportReport::default());
    }
    store.transaction(|tx| {
        let mut report = ImportReport::default();
        for mut block in blocks {
            let mut names = HashSet::new();
            for row in &block.rows {
                if !names.insert(row.field.name.clone()) {
                    return Err(Error::ValidationFailed(ValidationReport::issue(ValidationIssue::DuplicateName(
                        row.field.name.clone(),
                    ))));
                }
            }
            let existing = tx.latest_dictionary(&block.class_name);
            if let Some(dict) = &existing {
                for row in &mut block.rows {
                    let declared = dict.field(&row.field.name).map(|(_, f)| f.ty);
                    let widened = match (row.field.ty, declared) {
                        (PrimitiveType::Int, Some(PrimitiveType::Float)) => PrimitiveType::Float,
                        (PrimitiveType::IntArray, Some(PrimitiveType::FloatArray)) => PrimitiveType::FloatArray,
                        _ => continue,
                    };
                    report.warnings.push(format!(
                        "line {}: {}.{} widened from {} to {}",
                        row.line, block.class_name, row.field.name, row.field.ty, widened
                    ));
                    row.field.ty = widened;
                }
            }
            let fields: Vec<FieldSpec> = block.rows.iter().map(|r| r.field.clone()).collect();
            let values = block
                .rows
                .iter()
                .map(|r| ParameterValue::parse(r.field.ty, &r.literal).map_err(|e| malformed(r.line, e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let (_, dict_version) = tx.register_class(&DictionaryDraft::new(block.class_name.clone(), fields))?;
            if existing.map(|d| d.dict_version) != Some(dict_version) {
                report.dictionaries_registered += 1;
            }
            tx.put_object(&block.class_name, &block.instance_name, &block.scope, &values)?;
            report.collections_imported += 1;
        }
        Ok(report)
    })
}
