//! XML export and import of parameter collections.
//!
//! ```xml
//! <?xml version="1.0" encoding="UTF-8"?>
//! <primary-numbers version="1">
//!   <collection class="C" instance="i" scope="/A" dict-version="1" object-version="1">
//!     <param name="Rmax" type="float" comment="Outer Radius">1400.0</param>
//!   </collection>
//! </primary-numbers>
//! ```
//!
//! Output is deterministic: collections are ordered by scope, class and
//! instance, attributes appear in a fixed order, indentation is two spaces
//! and lines end with `\n`. Only the latest revision of each instance is
//! exported.

use std::collections::HashSet;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::escape::resolve_predefined_entity;
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::model::{DictionaryDraft, FieldSpec, ParameterValue, PrimitiveType, ScopePath, ValidationIssue, ValidationReport};
use crate::store::Store;

use super::ImportReport;

pub const XML_DECLARATION: &str = r#"<?xml version="1.0" encoding="UTF-8"?>"#;
pub const DOCUMENT_VERSION: &str = "1";

/// Renders the latest revision of every collection at or beneath `scope`
/// (all collections when `None`).
pub fn export_xml(store: &Store, scope: Option<&ScopePath>) -> Result<String> {
    let mut collections = Vec::new();
    for key in store.instances() {
        let inst = store.get_object(&key.class_name, &key.instance_name, None)?;
        if scope.is_some_and(|s| !inst.scope.starts_with(s)) {
            continue;
        }
        collections.push((inst.scope.to_string(), inst));
    }
    collections.sort_by(|a, b| {
        (&a.0, &a.1.class_name, &a.1.instance_name).cmp(&(&b.0, &b.1.class_name, &b.1.instance_name))
    });

    let mut out = String::new();
    out.push_str(XML_DECLARATION);
    out.push('\n');
    if collections.is_empty() {
        let _ = writeln!(out, r#"<primary-numbers version="{DOCUMENT_VERSION}"/>"#);
        return Ok(out);
    }
    let _ = writeln!(out, r#"<primary-numbers version="{DOCUMENT_VERSION}">"#);
    for (scope_text, inst) in &collections {
        let dict = store.get_dictionary(&inst.class_name, Some(inst.dict_version))?;
        let _ = write!(
            out,
            r#"  <collection class="{}" instance="{}" scope="{}" dict-version="{}" object-version="{}""#,
            inst.class_name, inst.instance_name, scope_text, inst.dict_version, inst.object_version
        );
        if dict.fields.is_empty() {
            out.push_str("/>\n");
            continue;
        }
        out.push_str(">\n");
        for (field, value) in dict.fields.iter().zip(&inst.values) {
            let _ = write!(out, r#"    <param name="{}" type="{}""#, field.name, field.ty);
            if let Some(unit) = &field.unit {
                let _ = write!(out, r#" unit="{}""#, escape_attr(unit));
            }
            if !field.comment.is_empty() {
                let _ = write!(out, r#" comment="{}""#, escape_attr(&field.comment));
            }
            let _ = writeln!(out, ">{}</param>", escape_text(&value.render()));
        }
        out.push_str("  </collection>\n");
    }
    out.push_str("</primary-numbers>\n");
    Ok(out)
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug)]
struct ParsedParam {
    name: String,
    ty: PrimitiveType,
    unit: Option<String>,
    comment: String,
    text: String,
}

#[derive(Debug)]
struct ParsedCollection {
    class_name: String,
    instance_name: String,
    scope: ScopePath,
    dict_version: Option<u32>,
    object_version: Option<u32>,
    params: Vec<ParsedParam>,
}

fn xml_err(reader: &Reader<&[u8]>, detail: impl std::fmt::Display) -> Error {
    Error::XmlParseError(format!("at byte {}: {detail}", reader.buffer_position()))
}

fn attributes(reader: &Reader<&[u8]>, e: &BytesStart<'_>) -> Result<Vec<(String, String)>> {
    e.attributes()
        .map(|a| {
            let a = a.map_err(|err| xml_err(reader, err))?;
            let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
            let value = a.unescape_value().map_err(|err| xml_err(reader, err))?.into_owned();
            Ok((key, value))
        })
        .collect()
}

fn take(attrs: &mut Vec<(String, String)>, key: &str) -> Option<String> {
    let idx = attrs.iter().position(|(k, _)| k == key)?;
    Some(attrs.remove(idx).1)
}

fn parse_collection_start(reader: &Reader<&[u8]>, e: &BytesStart<'_>) -> Result<ParsedCollection> {
    let mut attrs = attributes(reader, e)?;
    let mut required = |key: &str| take(&mut attrs, key).ok_or_else(|| xml_err(reader, format!("collection without `{key}`")));
    let class_name = required("class")?;
    let instance_name = required("instance")?;
    let scope = ScopePath::parse(&required("scope")?)?;
    let version = |v: Option<String>| -> Result<Option<u32>> {
        v.map(|s| s.parse().map_err(|_| xml_err(reader, format!("bad version `{s}`"))))
            .transpose()
    };
    let dict_version = version(take(&mut attrs, "dict-version"))?;
    let object_version = version(take(&mut attrs, "object-version"))?;
    Ok(ParsedCollection {
        class_name,
        instance_name,
        scope,
        dict_version,
        object_version,
        params: Vec::new(),
    })
}

fn parse_param_start(reader: &Reader<&[u8]>, e: &BytesStart<'_>) -> Result<ParsedParam> {
    let mut attrs = attributes(reader, e)?;
    let name = take(&mut attrs, "name").ok_or_else(|| xml_err(reader, "param without `name`"))?;
    let ty = take(&mut attrs, "type").ok_or_else(|| xml_err(reader, "param without `type`"))?;
    Ok(ParsedParam {
        name,
        ty: ty.parse()?,
        unit: take(&mut attrs, "unit"),
        comment: take(&mut attrs, "comment").unwrap_or_default(),
        text: String::new(),
    })
}

fn parse_document(text: &str) -> Result<Vec<ParsedCollection>> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(false);
    let mut collections = Vec::new();
    let mut seen_root = false;
    let mut root_closed = false;
    let mut current: Option<ParsedCollection> = None;
    let mut param: Option<ParsedParam> = None;
    loop {
        let event = reader.read_event().map_err(|e| xml_err(&reader, e))?;
        match event {
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match (e.name().as_ref(), seen_root, &current, &param) {
                    (b"primary-numbers", false, _, _) => {
                        seen_root = true;
                        root_closed = empty;
                    }
                    (b"collection", true, None, _) if !root_closed => {
                        let c = parse_collection_start(&reader, e)?;
                        if empty {
                            collections.push(c);
                        } else {
                            current = Some(c);
                        }
                    }
                    (b"param", true, Some(_), None) => {
                        let p = parse_param_start(&reader, e)?;
                        if empty {
                            current.as_mut().expect("inside collection").params.push(p);
                        } else {
                            param = Some(p);
                        }
                    }
                    (name, ..) => {
                        return Err(xml_err(
                            &reader,
                            format!("unexpected element <{}>", String::from_utf8_lossy(name)),
                        ))
                    }
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"param" => {
                    let p = param.take().ok_or_else(|| xml_err(&reader, "stray </param>"))?;
                    current.as_mut().expect("param inside collection").params.push(p);
                }
                b"collection" => {
                    collections.push(current.take().ok_or_else(|| xml_err(&reader, "stray </collection>"))?);
                }
                b"primary-numbers" => root_closed = true,
                other => {
                    return Err(xml_err(
                        &reader,
                        format!("unexpected </{}>", String::from_utf8_lossy(other)),
                    ))
                }
            },
            Event::Text(t) => {
                let content = t.xml_content().map_err(|e| xml_err(&reader, e))?;
                match &mut param {
                    Some(p) => p.text.push_str(&content),
                    None if content.trim().is_empty() => {}
                    None => return Err(xml_err(&reader, "unexpected text")),
                }
            }
            Event::CData(c) => {
                let p = param.as_mut().ok_or_else(|| xml_err(&reader, "unexpected CDATA"))?;
                p.text.push_str(&c.decode().map_err(|e| xml_err(&reader, e))?);
            }
            Event::GeneralRef(r) => {
                let p = param.as_mut().ok_or_else(|| xml_err(&reader, "unexpected entity reference"))?;
                if let Some(c) = r.resolve_char_ref().map_err(|e| xml_err(&reader, e))? {
                    p.text.push(c);
                } else {
                    let name = r.decode().map_err(|e| xml_err(&reader, e))?;
                    let resolved = resolve_predefined_entity(&name)
                        .ok_or_else(|| xml_err(&reader, format!("unknown entity &{name};")))?;
                    p.text.push_str(resolved);
                }
            }
        }
    }
    if !seen_root || !root_closed || current.is_some() {
        return Err(Error::XmlParseError("document is incomplete".into()));
    }
    Ok(collections)
}

/// Imports every collection of an exported document in one transaction.
pub fn import_xml(store: &Store, text: &str) -> Result<ImportReport> {
    let collections = parse_document(text)?;
    store.transaction(|tx| {
        let mut report = ImportReport::default();
        for c in collections {
            let mut names = HashSet::new();
            for p in &c.params {
                if !names.insert(p.name.as_str()) {
                    return Err(Error::ValidationFailed(ValidationReport::issue(ValidationIssue::DuplicateName(
                        p.name.clone(),
                    ))));
                }
            }
            let fields = c
                .params
                .iter()
                .map(|p| FieldSpec {
                    name: p.name.clone(),
                    ty: p.ty,
                    comment: p.comment.clone(),
                    unit: p.unit.clone(),
                    default: None,
                })
                .collect();
            let before = tx.latest_dictionary(&c.class_name).map(|d| d.dict_version);
            let (_, dict_version) = tx.register_class(&DictionaryDraft::new(c.class_name.clone(), fields))?;
            if before != Some(dict_version) {
                report.dictionaries_registered += 1;
            }
            let values = c
                .params
                .iter()
                .map(|p| ParameterValue::parse(p.ty, &p.text))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let stored = tx.put_object(&c.class_name, &c.instance_name, &c.scope, &values)?;
            report.collections_imported += 1;
            if c.dict_version.is_some_and(|v| v != stored.dict_version)
                || c.object_version.is_some_and(|v| v != stored.object_version)
            {
                report.warnings.push(format!(
                    "{}/{} stored as object v{} under dictionary v{}, document says v{} / d{}",
                    c.class_name,
                    c.instance_name,
                    stored.object_version,
                    stored.dict_version,
                    c.object_version.unwrap_or(0),
                    c.dict_version.unwrap_or(0),
                ));
            }
        }
        Ok(report)
    })
}
