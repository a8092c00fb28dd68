//! Change-log records and their canonical payload encodings.
//!
//! A record is framed as: 8-byte big-endian seq, 1-byte op code, 4-byte
//! big-endian payload length, payload. The same framing is used by the
//! on-disk log and by sync changesets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BlobRef, DataDictionary, FieldSpec, ParameterValue, PrimitiveType};

pub const FRAME_HEADER_LEN: usize = 13;
pub(crate) const BLOB_HEADER_LEN: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum OpCode {
    PutDictionary = 1,
    PutObject = 2,
    PutBlob = 3,
    CreateFolder = 4,
    IovStore = 5,
    TagHead = 6,
}

impl OpCode {
    pub fn from_u8(code: u8) -> Option<OpCode> {
        Some(match code {
            1 => OpCode::PutDictionary,
            2 => OpCode::PutObject,
            3 => OpCode::PutBlob,
            4 => OpCode::CreateFolder,
            5 => OpCode::IovStore,
            6 => OpCode::TagHead,
            _ => return None,
        })
    }
}

/// One committed mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeRecord {
    pub seq: u64,
    pub op: OpCode,
    pub payload: Vec<u8>,
}

impl ChangeRecord {
    pub fn frame_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn write_frame(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.push(self.op as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
    }

    /// Decodes one frame from the front of `buf`, returning the record and
    /// the number of bytes consumed. `Ok(None)` means `buf` holds only a
    /// partial frame.
    pub fn read_frame(buf: &[u8]) -> Result<Option<(ChangeRecord, usize)>> {
        let Some(header) = buf.get(..FRAME_HEADER_LEN) else {
            return Ok(None);
        };
        let (seq, op, len) = parse_header(header.try_into().expect("header length"))?;
        let end = FRAME_HEADER_LEN + len as usize;
        let Some(payload) = buf.get(FRAME_HEADER_LEN..end) else {
            return Ok(None);
        };
        Ok(Some((
            ChangeRecord {
                seq,
                op,
                payload: payload.to_vec(),
            },
            end,
        )))
    }
}

pub(crate) fn parse_header(header: &[u8; FRAME_HEADER_LEN]) -> Result<(u64, OpCode, u32)> {
    let seq = u64::from_be_bytes(header[..8].try_into().unwrap());
    let op = OpCode::from_u8(header[8]).ok_or_else(|| Error::Corrupt(format!("unknown op code {}", header[8])))?;
    let len = u32::from_be_bytes(header[9..13].try_into().unwrap());
    Ok((seq, op, len))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct FieldRow {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: PrimitiveType,
    pub unit: Option<String>,
    pub comment: String,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct DictionaryPayload {
    pub class: String,
    pub dict_version: u32,
    pub fields: Vec<FieldRow>,
}

impl DictionaryPayload {
    pub fn from_dictionary(dict: &DataDictionary) -> Self {
        DictionaryPayload {
            class: dict.class_name.clone(),
            dict_version: dict.dict_version,
            fields: field_rows(&dict.fields),
        }
    }

    pub fn into_dictionary(self) -> Result<DataDictionary> {
        let fields = self
            .fields
            .into_iter()
            .map(|row| {
                let default = row
                    .default
                    .map(|text| ParameterValue::parse(row.ty, &text))
                    .transpose()?;
                Ok(FieldSpec {
                    name: row.name,
                    ty: row.ty,
                    comment: row.comment,
                    unit: row.unit,
                    default,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dict = DataDictionary {
            class_name: self.class,
            dict_version: self.dict_version,
            fields,
        };
        dict.check()?;
        Ok(dict)
    }
}

pub(crate) fn field_rows(fields: &[FieldSpec]) -> Vec<FieldRow> {
    fields
        .iter()
        .map(|f| FieldRow {
            name: f.name.clone(),
            ty: f.ty,
            unit: f.unit.clone(),
            comment: f.comment.clone(),
            default: f.default.as_ref().map(ParameterValue::render),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct ObjectPayload {
    pub class: String,
    pub instance: String,
    pub object_version: u32,
    pub dict_version: u32,
    pub scope: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct FolderPayload {
    pub path: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct IovStorePayload {
    pub folder: String,
    pub since: u64,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TagPayload {
    pub folder: String,
    pub tag: String,
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec(value).expect("payload serialization cannot fail")
}

pub(crate) fn from_json<'a, T: Deserialize<'a>>(payload: &'a [u8]) -> Result<T> {
    serde_json::from_slice(payload).map_err(|e| Error::Corrupt(format!("bad record payload: {e}")))
}

/// Blob payload: 8-byte id, 32-byte SHA-256, 8-byte length, raw bytes.
pub(crate) fn encode_blob(reference: &BlobRef, bytes: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(BLOB_HEADER_LEN + bytes.len());
    out.extend_from_slice(&reference.blob_id.to_be_bytes());
    out.extend_from_slice(&reference.checksum);
    out.extend_from_slice(&reference.length.to_be_bytes());
    out.extend_from_slice(bytes);
    out
}

pub(crate) fn decode_blob_header(header: &[u8]) -> Result<BlobRef> {
    if header.len() < BLOB_HEADER_LEN {
        return Err(Error::Corrupt("truncated blob header".into()));
    }
    Ok(BlobRef {
        blob_id: u64::from_be_bytes(header[..8].try_into().unwrap()),
        checksum: header[8..40].try_into().unwrap(),
        length: u64::from_be_bytes(header[40..48].try_into().unwrap()),
    })
}
